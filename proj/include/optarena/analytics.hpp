#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "optarena/arena.hpp"
#include "optarena/domain.hpp"
#include "optarena/ledger.hpp"

namespace optarena {

// 100 * (reference - alternative) / reference. Positive means the
// alternative is cheaper; undefined when reference is zero.
inline std::optional<double> cost_savings(Money reference, Money alternative) {
  if (reference.picos() <= 0) return std::nullopt;
  return 100.0 * static_cast<double>(reference.picos() - alternative.picos()) /
         static_cast<double>(reference.picos());
}

inline std::optional<double> time_speedup(double reference_seconds, double alternative_seconds) {
  if (reference_seconds <= 0) return std::nullopt;
  return 100.0 * (reference_seconds - alternative_seconds) / reference_seconds;
}

struct ComparativeRow {
  std::string combination_id;
  std::string approach_label;
  double mean_rank = 0.0;     // per-combination mode; 0 when absent
  double mean_elo = 0.0;
  Money total_cost;           // generation cost over included units
  double total_wall_time = 0.0;
  Money mean_cost_per_snippet() const {
    return unit_count > 0 ? Money::from_picos(total_cost.picos() / unit_count) : Money::zero();
  }
  double mean_wall_time_per_snippet() const {
    return unit_count > 0 ? total_wall_time / unit_count : 0.0;
  }
  int unit_count = 0;  // completed (snippet, repetition) units included
  int exclusions = 0;
};

struct ComparativeReport {
  std::vector<ComparativeRow> per_combination;   // 5 approaches x combinations
  std::vector<ComparativeRow> cross_combination; // GA/MoA x combinations
};

struct AnalyticsSpec {
  std::vector<Combination> combinations;
  std::vector<std::string> cross_combination_ids;  // empty disables cross reports
  TournamentParams elo;
  int repetition_count = 1;
  std::string config_hash;
};

inline std::vector<std::string> subjects_for_combination(const Combination& c) {
  std::vector<std::string> subjects = {ApproachTag::moa().label(), ApproachTag::ga().label()};
  for (const auto& p : c.proposers) subjects.push_back(ApproachTag::individual(p).label());
  return subjects;
}

namespace analytics_detail {

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Sums generation cost/time per (combination, approach) from completed-unit
// variant totals.
inline void accumulate_unit_totals(const RunLedger& ledger, ComparativeRow& row) {
  for (const auto& unit : ledger.completed_units()) {
    if (unit.combination_id != row.combination_id || unit.approach_label != row.approach_label)
      continue;
    auto v = ledger.find_variant(unit);
    if (!v) continue;
    row.total_cost += v->totals.cost;
    row.total_wall_time += v->totals.wall_time_seconds;
    row.unit_count += 1;
  }
}

}  // namespace analytics_detail

inline ComparativeReport build_comparative_report(const RunLedger& ledger,
                                                  const AnalyticsSpec& spec) {
  ComparativeReport report;
  for (const auto& comb : spec.combinations) {
    auto subjects = subjects_for_combination(comb);
    auto rank_agg = rank_per_combination(ledger, comb.id, subjects);
    // Mean ELO per subject over the same per-combination tournaments.
    std::map<std::string, std::pair<double, int>> elo_sum;
    const std::string prefix = "percomb|" + comb.id + "|";
    for (const auto& [scope, ratings] : ledger.tournament_ratings()) {
      if (scope.rfind(prefix, 0) != 0) continue;
      for (const auto& [subject, rating] : ratings) {
        elo_sum[subject].first += rating;
        elo_sum[subject].second += 1;
      }
    }
    for (const auto& agg : rank_agg) {
      ComparativeRow row;
      row.combination_id = comb.id;
      row.approach_label = agg.subject;
      row.mean_rank = agg.mean;
      row.exclusions = agg.exclusions;
      if (auto it = elo_sum.find(agg.subject); it != elo_sum.end() && it->second.second > 0)
        row.mean_elo = it->second.first / it->second.second;
      analytics_detail::accumulate_unit_totals(ledger, row);
      report.per_combination.push_back(std::move(row));
    }
  }
  if (!spec.cross_combination_ids.empty()) {
    for (const auto& agg : rank_cross_combination(ledger, spec.cross_combination_ids)) {
      // subject is "<approach>@<combination>"
      auto at = agg.subject.find('@');
      ComparativeRow row;
      row.approach_label = agg.subject.substr(0, at);
      row.combination_id = at == std::string::npos ? "" : agg.subject.substr(at + 1);
      row.mean_elo = agg.mean;
      analytics_detail::accumulate_unit_totals(ledger, row);
      report.cross_combination.push_back(std::move(row));
    }
  }
  return report;
}

// Materializes the result artifacts from the ledger alone: per-combination
// rank tables, the ELO-vs-cost table, and scatter rows restricted to
// snippets with the complete cross-combination variant set. Regenerating
// from the same ledger yields byte-identical files.
inline void emit_reports(const RunLedger& ledger, const AnalyticsSpec& spec,
                         const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  using analytics_detail::fmt;
  fs::create_directories(out_dir);

  std::string header = "# config_hash=" + spec.config_hash +
                       " elo_k=" + fmt(spec.elo.k_factor, 1) +
                       " elo_initial=" + fmt(spec.elo.initial_rating, 1) +
                       " rounds=" + std::to_string(spec.elo.rounds) +
                       " repetitions=" + std::to_string(spec.repetition_count) + "\n";
  ComparativeReport report = build_comparative_report(ledger, spec);

  // (a) rank table per combination, Fig. 2 structure.
  for (const auto& comb : spec.combinations) {
    std::ofstream out(out_dir / ("rank_table_" + comb.id + ".csv"), std::ios::binary);
    out << header;
    out << "approach,mean_rank,mean_elo,units,exclusions\n";
    bool any = false;
    for (const auto& row : report.per_combination) {
      if (row.combination_id != comb.id) continue;
      any = true;
      out << row.approach_label << "," << fmt(row.mean_rank, 4) << "," << fmt(row.mean_elo, 4)
          << "," << row.unit_count << "," << row.exclusions << "\n";
    }
    if (!any) out << "# no data\n";
  }

  // (b) ELO vs cost per (approach, combination), cross-combination mode.
  {
    std::ofstream out(out_dir / "elo_vs_cost.csv", std::ios::binary);
    out << header;
    out << "combination,approach,mean_elo,mean_cost_per_snippet_usd,mean_wall_time_s,units\n";
    if (report.cross_combination.empty()) {
      out << "# no data\n";
    } else {
      for (const auto& row : report.cross_combination) {
        out << row.combination_id << "," << row.approach_label << "," << fmt(row.mean_elo, 4)
            << "," << row.mean_cost_per_snippet().to_usd_string() << ","
            << fmt(row.mean_wall_time_per_snippet(), 6) << "," << row.unit_count << "\n";
      }
    }
  }

  // (c) scatter rows, complete-set filtered: a cross tournament only exists
  // for snippets holding all 2 x |combinations| variants.
  {
    std::ofstream out(out_dir / "scatter.csv", std::ios::binary);
    int included = 0, excluded = 0;
    std::ostringstream body;
    std::string combos;
    for (const auto& c : spec.cross_combination_ids) combos += c + "+";
    const std::string prefix = "cross|" + combos + "|";
    std::set<std::pair<std::string, int>> rated_pools;
    for (const auto& [scope, ratings] : ledger.tournament_ratings()) {
      if (scope.rfind(prefix, 0) != 0) continue;
      // scope = cross|<combos>|<snippet>|<rep>
      std::string rest = scope.substr(prefix.size());
      auto bar = rest.find('|');
      std::string snip = rest.substr(0, bar);
      int rep = std::stoi(rest.substr(bar + 1));
      rated_pools.insert({snip, rep});
      for (const auto& [subject, rating] : ratings) {
        auto at = subject.find('@');
        std::string approach = subject.substr(0, at);
        std::string comb = subject.substr(at + 1);
        auto v = ledger.find_variant({snip, approach, comb, rep});
        if (!v) continue;
        body << snip << "," << rep << "," << approach << "," << comb << "," << fmt(rating, 4)
             << "," << fmt(v->totals.wall_time_seconds, 6) << ","
             << v->totals.cost.to_usd_string() << "\n";
        ++included;
      }
    }
    if (!spec.cross_combination_ids.empty()) {
      for (const auto& [snip_id, snip] : ledger.snippets()) {
        for (int rep = 1; rep <= spec.repetition_count; ++rep) {
          if (!rated_pools.count({snip_id, rep})) ++excluded;
        }
      }
    }
    out << header;
    out << "# filter: complete-set over combinations " << combos << " included_rows=" << included
        << " excluded_pools=" << excluded << "\n";
    out << "snippet_id,repetition,approach,combination,elo,wall_time_s,cost_usd\n";
    if (included == 0) out << "# no data\n";
    else out << body.str();
  }

  // Column-documented text summary with headline comparisons.
  {
    std::ofstream out(out_dir / "summary.txt", std::ios::binary);
    out << header;
    out << "Columns: rank_table_*.csv -> approach, mean rank (1=best, average-rank ties),\n"
        << "  mean ELO, completed units, excluded pools.\n"
        << "Columns: elo_vs_cost.csv -> combination, approach, mean ELO over cross\n"
        << "  tournaments, mean generation cost per snippet (USD, judge cost excluded),\n"
        << "  mean generation wall time per snippet (s), completed units.\n"
        << "Columns: scatter.csv -> one row per (snippet, repetition, approach,\n"
        << "  combination) with ELO, wall time, generation cost; complete-set filtered.\n\n";
    // Savings/speedup with GA as the reference and MoA as the alternative.
    std::map<std::string, const ComparativeRow*> ga_rows, moa_rows;
    for (const auto& row : report.cross_combination) {
      if (row.approach_label == "ga") ga_rows[row.combination_id] = &row;
      if (row.approach_label == "moa") moa_rows[row.combination_id] = &row;
    }
    for (const auto& [comb, ga_row] : ga_rows) {
      auto it = moa_rows.find(comb);
      if (it == moa_rows.end()) continue;
      auto savings = cost_savings(ga_row->mean_cost_per_snippet(), it->second->mean_cost_per_snippet());
      auto speedup = time_speedup(ga_row->mean_wall_time_per_snippet(),
                                  it->second->mean_wall_time_per_snippet());
      out << comb << ": moa vs ga cost savings = "
          << (savings ? fmt(*savings, 1) + "%" : std::string("n/a"))
          << ", time speedup = " << (speedup ? fmt(*speedup, 1) + "%" : std::string("n/a"))
          << "\n";
    }
    if (ga_rows.empty()) out << "# no cross-combination data\n";
  }
}

}  // namespace optarena

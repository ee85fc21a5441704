#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "optarena/analytics.hpp"
#include "optarena/arena.hpp"
#include "optarena/config.hpp"
#include "optarena/ga.hpp"
#include "optarena/gateway.hpp"
#include "optarena/ledger.hpp"
#include "optarena/moa.hpp"

namespace optarena {

struct IngestSummary {
  int stored = 0;
  int duplicates = 0;
  int errors = 0;
  std::vector<std::string> error_lines;
};

struct RunSummary {
  int units_completed = 0;
  int units_failed = 0;
  int units_skipped = 0;  // already complete (or failed) in the ledger
};

struct EvalSummary {
  int tournaments_run = 0;
  int tournaments_skipped = 0;
  int pools_unrated = 0;  // fewer than 2 variants
  int incomplete_cross_pools = 0;
  int matches = 0;
};

// Parses one manifest line: source_path <TAB> start <TAB> end <TAB> language.
// '#' lines and blanks are ignored.
inline std::optional<std::tuple<std::string, LineSpan, std::string>> parse_manifest_line(
    const std::string& line) {
  if (line.empty() || line[0] == '#') return std::nullopt;
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (cols.size() != 4) throw std::invalid_argument("manifest line needs 4 tab-separated columns");
  LineSpan span{std::stoi(cols[1]), std::stoi(cols[2])};
  return std::make_tuple(cols[0], span, cols[3]);
}

// Extracts the inclusive line range [start, end] from file content.
inline std::string slice_lines(const std::string& content, LineSpan span) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(content.substr(pos));
      break;
    }
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (span.start < 1 || span.end > static_cast<int>(lines.size()))
    throw std::out_of_range("line span " + std::to_string(span.start) + ".." +
                            std::to_string(span.end) + " exceeds file length " +
                            std::to_string(lines.size()));
  std::string out;
  for (int i = span.start; i <= span.end; ++i) {
    out += lines[i - 1];
    out += "\n";
  }
  return out;
}

// Drives the full lifecycle against one ledger: ingest snippets, generate
// variants (MoA, GA, individuals), evaluate tournaments, emit reports.
class ExperimentRunner {
 public:
  ExperimentRunner(const ExperimentConfig& config, RunLedger& ledger, ChatBackend& backend)
      : config_(config),
        ledger_(ledger),
        gateway_(config.agents, backend, ledger, config.retry),
        judge_(gateway_, config.judge_agent, config.templates),
        fragments_(config.fragment_library()) {}

  ModelGateway& gateway() { return gateway_; }

  // --- ingest ------------------------------------------------------------

  IngestSummary ingest(const std::filesystem::path& manifest_path,
                       const std::filesystem::path& base_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
    IngestSummary summary;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      try {
        auto entry = parse_manifest_line(line);
        if (!entry) continue;
        auto& [path, span, language] = *entry;
        std::ifstream src(base_dir / path, std::ios::binary);
        if (!src) throw std::runtime_error("cannot read source file " + path);
        std::string content((std::istreambuf_iterator<char>(src)),
                            std::istreambuf_iterator<char>());
        CodeSnippet snippet = CodeSnippet::make(path, span, language, slice_lines(content, span));
        if (ledger_.append_snippet(snippet) < 0) {
          ++summary.duplicates;
        } else {
          ++summary.stored;
        }
      } catch (const std::exception& e) {
        ++summary.errors;
        summary.error_lines.push_back("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return summary;
  }

  // --- generation phase ---------------------------------------------------

  std::vector<std::string> approach_labels(const Combination& comb) const {
    std::vector<std::string> labels;
    for (const auto& a : config_.approaches) {
      if (a == "individual") {
        for (const auto& p : comb.proposers)
          labels.push_back(ApproachTag::individual(p).label());
      } else {
        labels.push_back(a);
      }
    }
    return labels;
  }

  RunSummary run(std::ostream& log = std::cout) {
    std::vector<UnitKey> pending;
    for (const auto& comb : config_.combinations) {
      for (const auto& [snippet_id, snippet] : ledger_.snippets()) {
        for (const auto& label : approach_labels(comb)) {
          for (int rep = 1; rep <= config_.repetitions; ++rep) {
            pending.push_back({snippet_id, label, comb.id, rep});
          }
        }
      }
    }
    RunSummary summary;
    std::atomic<int> completed{0}, failed{0}, skipped{0};
    auto work = [&](const UnitKey& unit) {
      if (ledger_.is_unit_complete(unit) || ledger_.is_unit_failed(unit)) {
        ++skipped;
        return;
      }
      if (execute_unit(unit)) {
        ++completed;
      } else {
        ++failed;
      }
    };
    if (config_.workers <= 1) {
      for (const auto& unit : pending) work(unit);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (int w = 0; w < config_.workers; ++w) {
        pool.emplace_back([&] {
          while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) break;
            work(pending[i]);
          }
        });
      }
      for (auto& t : pool) t.join();
    }
    summary.units_completed = completed;
    summary.units_failed = failed;
    summary.units_skipped = skipped;
    log << "run: " << summary.units_completed << " completed, " << summary.units_failed
        << " failed, " << summary.units_skipped << " skipped\n";
    return summary;
  }

  // --- evaluation phase ---------------------------------------------------

  EvalSummary evaluate(std::ostream& log = std::cout) {
    EvalSummary summary;
    // Per-combination tournaments: the 5-approach pool per (snippet, rep).
    for (const auto& comb : config_.combinations) {
      auto labels = approach_labels(comb);
      for (const auto& [snippet_id, snippet] : ledger_.snippets()) {
        for (int rep = 1; rep <= config_.repetitions; ++rep) {
          std::string scope = per_combination_scope(comb.id, snippet_id, rep);
          if (ledger_.is_tournament_complete(scope)) {
            ++summary.tournaments_skipped;
            continue;
          }
          std::vector<TournamentEntry> entries;
          for (const auto& label : labels) {
            if (auto v = ledger_.find_variant({snippet_id, label, comb.id, rep}))
              entries.push_back({v->id, label, v->content});
          }
          run_pool(snippet, entries, scope, comb.id, rep, summary);
        }
      }
    }
    // Cross-combination tournaments: GA/MoA over the listed combinations,
    // complete six-variant pools only.
    if (!config_.cross_combination_ids.empty()) {
      for (const auto& [snippet_id, snippet] : ledger_.snippets()) {
        for (int rep = 1; rep <= config_.repetitions; ++rep) {
          std::string scope =
              cross_combination_scope(config_.cross_combination_ids, snippet_id, rep);
          if (ledger_.is_tournament_complete(scope)) {
            ++summary.tournaments_skipped;
            continue;
          }
          std::vector<TournamentEntry> entries;
          bool complete = true;
          for (const auto& comb_id : config_.cross_combination_ids) {
            for (const char* approach : {"moa", "ga"}) {
              auto v = ledger_.find_variant({snippet_id, approach, comb_id, rep});
              if (!v) {
                complete = false;
                break;
              }
              entries.push_back({v->id, std::string(approach) + "@" + comb_id, v->content});
            }
            if (!complete) break;
          }
          if (!complete) {
            ++summary.incomplete_cross_pools;
            continue;
          }
          run_pool(snippet, entries, scope, "cross", rep, summary);
        }
      }
    }
    log << "evaluate: " << summary.tournaments_run << " tournaments, " << summary.matches
        << " matches, " << summary.tournaments_skipped << " skipped, "
        << summary.incomplete_cross_pools << " incomplete cross pools\n";
    return summary;
  }

  // --- reports ------------------------------------------------------------

  AnalyticsSpec analytics_spec() const {
    AnalyticsSpec spec;
    spec.combinations = config_.combinations;
    spec.cross_combination_ids = config_.cross_combination_ids;
    spec.elo = config_.arena;
    spec.repetition_count = config_.repetitions;
    spec.config_hash = config_.hash();
    return spec;
  }

  void report(const std::filesystem::path& out_dir, std::ostream& log = std::cout) {
    emit_reports(ledger_, analytics_spec(), out_dir);
    ComparativeReport rep = build_comparative_report(ledger_, analytics_spec());
    log << "combination  approach              mean_rank  mean_elo   units\n";
    for (const auto& row : rep.per_combination) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-12s %-20s %9.3f %9.2f %7d\n", row.combination_id.c_str(),
                    row.approach_label.c_str(), row.mean_rank, row.mean_elo, row.unit_count);
      log << buf;
    }
  }

 private:
  bool execute_unit(const UnitKey& unit) {
    const CodeSnippet& snippet = ledger_.snippets().at(unit.snippet_id);
    const Combination* comb = nullptr;
    for (const auto& c : config_.combinations)
      if (c.id == unit.combination_id) comb = &c;
    if (!comb) throw std::logic_error("unit references unknown combination");
    ApproachTag tag = ApproachTag::from_label(unit.approach_label);

    if (tag.kind == ApproachKind::MoA) {
      MoAPlan plan = MoAPlan::for_combination(*comb, config_.moa_layers, config_.templates);
      auto result = optimize_moa(snippet, plan, unit, config_.global_seed, gateway_);
      return finish_unit(unit, result.ok, result.failure_reason,
                         result.ok ? &result.variant : nullptr);
    }
    if (tag.kind == ApproachKind::GA) {
      auto result = optimize_ga(snippet, *comb, config_.ga, unit, config_.global_seed, gateway_,
                                judge_, config_.templates, fragments_);
      return finish_unit(unit, result.ok, result.failure_reason,
                         result.ok ? &result.variant : nullptr);
    }

    // Individual optimizer: a single proposer call.
    ChatRequest req;
    req.agent_name = *tag.model_name;
    req.messages = {{"user", render_template(config_.templates.proposer,
                                             {{"language", snippet.language_tag},
                                              {"snippet", snippet.content}})}};
    req.request_seed = derive_call_seed(config_.global_seed, unit, "individual", 0);
    CallContext ctx{CallRole::individual, 0, unit, "generate"};
    auto call = gateway_.complete(req, ctx);
    if (!call.ok) return finish_unit(unit, false, call.failure_reason, nullptr);
    auto code = extract_code_block(call.response.text);
    if (!code) return finish_unit(unit, false, "empty_variant", nullptr);
    OptimizationVariant v;
    v.snippet_id = snippet.id;
    v.approach = tag;
    v.combination_id = comb->id;
    v.repetition_index = unit.repetition_index;
    v.content = *code;
    v.trace = {call.call_id};
    v.totals.add(gateway_.ledger_call(call.call_id));
    v.id = variant_content_id(v.snippet_id, v.approach.label(), v.combination_id,
                              v.repetition_index, v.content);
    return finish_unit(unit, true, "", &v);
  }

  bool finish_unit(const UnitKey& unit, bool ok, const std::string& reason,
                   const OptimizationVariant* variant) {
    if (!ok) {
      ledger_.mark_unit_failed(unit, reason);
      return false;
    }
    ledger_.append_variant(*variant);
    ledger_.mark_unit_complete(unit);
    return true;
  }

  void run_pool(const CodeSnippet& snippet, std::vector<TournamentEntry>& entries,
                const std::string& scope, const std::string& combination_attr, int rep,
                EvalSummary& summary) {
    if (entries.size() < 2) {
      ++summary.pools_unrated;
      return;
    }
    UnitKey judge_unit{snippet.id, "arena", combination_attr, rep};
    CallContext ctx{CallRole::judge, 0, judge_unit, "evaluate"};
    JudgeFn judge_fn = [&](const TournamentEntry& a, const TournamentEntry& b, int round) {
      std::uint64_t seed = derive_call_seed(
          config_.global_seed, judge_unit, scope + "|" + a.variant_id + "|" + b.variant_id, round);
      return judge_.judge_pair(snippet.content, a, b, ctx, seed);
    };
    auto result = run_tournament(snippet.id, entries, judge_fn, config_.arena, scope);
    for (const auto& m : result.matches) ledger_.append_match(m);
    ledger_.mark_tournament_complete(scope, result.ratings,
                                     static_cast<int>(result.matches.size()));
    ++summary.tournaments_run;
    summary.matches += static_cast<int>(result.matches.size());
  }

  const ExperimentConfig& config_;
  RunLedger& ledger_;
  ModelGateway gateway_;
  PairJudge judge_;
  std::vector<std::string> fragments_;
};

}  // namespace optarena

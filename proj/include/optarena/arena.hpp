#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optarena/domain.hpp"
#include "optarena/gateway.hpp"
#include "optarena/ledger.hpp"
#include "optarena/prompts.hpp"

namespace optarena {

// Classical ELO update. Returned pair is exactly zero-sum: B receives the
// negation of A's delta, so rating mass is conserved bit-for-bit.
inline std::pair<double, double> elo_update(double r_a, double r_b, double score_a, double k) {
  double expected_a = 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
  double delta = k * (score_a - expected_a);
  return {r_a + delta, r_b - delta};
}

// Strict verdict parsing: the reply must be "1" or "2" after trimming, or
// contain a line that is exactly "1" or "2".
inline std::optional<int> parse_verdict(const std::string& text) {
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::string();
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  };
  std::string t = trim(text);
  if (t == "1") return 1;
  if (t == "2") return 2;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line = trim(nl == std::string::npos ? text.substr(start)
                                                    : text.substr(start, nl - start));
    if (line == "1") return 1;
    if (line == "2") return 2;
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return std::nullopt;
}

struct JudgeOutcome {
  std::optional<double> score_a;        // empty when the match failed
  std::vector<std::string> call_ids;    // every judge call issued
};

struct TournamentEntry {
  std::string variant_id;
  std::string subject;  // rating key, e.g. approach label
  std::string content;
};

// Order-swapped double judging over one pair of variants. Both orderings are
// asked; agreement yields 1 or 0 for A, disagreement yields a 0.5 draw. An
// unparseable verdict is re-asked once; if still unparseable that ordering
// counts as the disagreeing side, and two dead orderings fail the match.
class PairJudge {
 public:
  PairJudge(ModelGateway& gateway, std::string judge_agent, const PromptTemplates& templates)
      : gateway_(gateway), judge_agent_(std::move(judge_agent)), templates_(templates) {}

  JudgeOutcome judge_pair(const std::string& original_snippet, const TournamentEntry& a,
                          const TournamentEntry& b, const CallContext& ctx,
                          std::uint64_t seed) {
    JudgeOutcome out;
    if (a.variant_id == b.variant_id) {  // identical content, no calls needed
      out.score_a = 0.5;
      return out;
    }
    auto forward = ask_ordering(original_snippet, a.content, b.content, ctx, seed * 2);
    auto backward = ask_ordering(original_snippet, b.content, a.content, ctx, seed * 2 + 1);
    out.call_ids = forward.call_ids;
    out.call_ids.insert(out.call_ids.end(), backward.call_ids.begin(), backward.call_ids.end());

    // Map each ordering onto "did A win".
    std::optional<bool> a_wins_fwd, a_wins_bwd;
    if (forward.verdict) a_wins_fwd = (*forward.verdict == 1);
    if (backward.verdict) a_wins_bwd = (*backward.verdict == 2);

    if (!a_wins_fwd && !a_wins_bwd) return out;  // match failed
    if (a_wins_fwd && a_wins_bwd && *a_wins_fwd == *a_wins_bwd) {
      out.score_a = *a_wins_fwd ? 1.0 : 0.0;
    } else {
      out.score_a = 0.5;  // positional disagreement (or one dead ordering)
    }
    return out;
  }

 private:
  struct Ordering {
    std::optional<int> verdict;
    std::vector<std::string> call_ids;
  };

  Ordering ask_ordering(const std::string& snippet, const std::string& first,
                        const std::string& second, const CallContext& ctx,
                        std::uint64_t seed) {
    std::string prompt = render_template(
        templates_.judge,
        {{"snippet", snippet}, {"candidate_1", first}, {"candidate_2", second}});
    Ordering result;
    for (int attempt = 0; attempt < 2; ++attempt) {  // one re-ask on bad verdicts
      ChatRequest req;
      req.agent_name = judge_agent_;
      req.messages = {{"user", prompt}};
      req.request_seed = seed * 2 + static_cast<std::uint64_t>(attempt);
      CallContext judge_ctx = ctx;
      judge_ctx.role = CallRole::judge;
      auto call = gateway_.complete(req, judge_ctx);
      if (call.ok) {
        result.call_ids.push_back(call.call_id);
        result.verdict = parse_verdict(call.response.text);
        if (result.verdict) break;
      } else {
        result.call_ids.push_back(call.call_id);
      }
    }
    return result;
  }

  ModelGateway& gateway_;
  std::string judge_agent_;
  const PromptTemplates& templates_;
};

struct TournamentParams {
  double k_factor = 32.0;
  int rounds = 1;
  double initial_rating = 1000.0;
};

struct TournamentResult {
  std::map<std::string, double> ratings;  // subject -> final rating
  std::vector<MatchRecord> matches;
  int failed_matches = 0;
  bool rated = false;  // false when fewer than 2 entries
};

// Callable deciding one pair; production wires this to PairJudge, tests can
// script outcomes directly.
using JudgeFn = std::function<JudgeOutcome(const TournamentEntry& a, const TournamentEntry& b,
                                           int round)>;

// Full round-robin per round over a per-snippet variant pool. Matches run in
// canonical order sorted by (round, variant_a id, variant_b id) and ELO
// updates apply sequentially in that order, so results are reproducible
// regardless of how judge calls were scheduled.
inline TournamentResult run_tournament(const std::string& snippet_id,
                                       std::vector<TournamentEntry> entries,
                                       const JudgeFn& judge, TournamentParams params,
                                       const std::string& scope_key) {
  TournamentResult result;
  if (entries.size() < 2) return result;
  result.rated = true;
  std::sort(entries.begin(), entries.end(),
            [](const TournamentEntry& a, const TournamentEntry& b) {
              return a.variant_id < b.variant_id;
            });
  for (const auto& e : entries) result.ratings[e.subject] = params.initial_rating;

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        const TournamentEntry& a = entries[i];
        const TournamentEntry& b = entries[j];
        JudgeOutcome outcome = judge(a, b, round);
        if (!outcome.score_a) {
          ++result.failed_matches;
          continue;
        }
        MatchRecord m;
        m.snippet_id = snippet_id;
        m.variant_a = a.variant_id;
        m.variant_b = b.variant_id;
        m.score_a = *outcome.score_a;
        m.judge_call_ids = outcome.call_ids;
        m.round_index = round;
        m.scope_key = scope_key;
        result.matches.push_back(std::move(m));
        auto [ra, rb] = elo_update(result.ratings[a.subject], result.ratings[b.subject],
                                   *outcome.score_a, params.k_factor);
        result.ratings[a.subject] = ra;
        result.ratings[b.subject] = rb;
      }
    }
  }
  return result;
}

// Ratings -> ranks 1..n with average-rank tie handling (two subjects tied at
// the top both get rank 1.5).
inline std::map<std::string, double> ratings_to_ranks(const std::map<std::string, double>& ratings) {
  std::vector<std::pair<std::string, double>> sorted(ratings.begin(), ratings.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, double> ranks;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1].second == sorted[i].second) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[sorted[t].first] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

struct ApproachAggregate {
  std::string subject;
  double mean = 0.0;   // mean rank or mean ELO depending on mode
  int sample_count = 0;
  int exclusions = 0;  // pools where this subject was absent (failures)
};

// Scope key helpers shared by evaluation and reporting.
inline std::string per_combination_scope(const std::string& combination_id,
                                         const std::string& snippet_id, int repetition) {
  return "percomb|" + combination_id + "|" + snippet_id + "|" + std::to_string(repetition);
}

inline std::string cross_combination_scope(const std::vector<std::string>& combination_ids,
                                           const std::string& snippet_id, int repetition) {
  std::string combos;
  for (const auto& c : combination_ids) combos += c + "+";
  return "cross|" + combos + "|" + snippet_id + "|" + std::to_string(repetition);
}

// Mean rank per approach over all completed per-combination tournaments of
// one combination. Pools missing an approach count as exclusions for it.
inline std::vector<ApproachAggregate> rank_per_combination(
    const RunLedger& ledger, const std::string& combination_id,
    const std::vector<std::string>& subjects) {
  std::map<std::string, ApproachAggregate> agg;
  for (const auto& s : subjects) agg[s].subject = s;
  const std::string prefix = "percomb|" + combination_id + "|";
  for (const auto& [scope, ratings] : ledger.tournament_ratings()) {
    if (scope.rfind(prefix, 0) != 0) continue;
    auto ranks = ratings_to_ranks(ratings);
    for (const auto& s : subjects) {
      auto it = ranks.find(s);
      if (it == ranks.end()) {
        agg[s].exclusions += 1;
        continue;
      }
      agg[s].mean += it->second;
      agg[s].sample_count += 1;
    }
  }
  std::vector<ApproachAggregate> out;
  for (auto& [s, a] : agg) {
    if (a.sample_count > 0) a.mean /= a.sample_count;
    out.push_back(a);
  }
  return out;
}

// Mean ELO per (approach, combination) subject over completed
// cross-combination tournaments. Only complete six-variant pools ever get a
// cross tournament, so this inherits the complete-set filter.
inline std::vector<ApproachAggregate> rank_cross_combination(
    const RunLedger& ledger, const std::vector<std::string>& combination_ids) {
  std::string combos;
  for (const auto& c : combination_ids) combos += c + "+";
  const std::string prefix = "cross|" + combos + "|";
  std::map<std::string, ApproachAggregate> agg;
  for (const auto& [scope, ratings] : ledger.tournament_ratings()) {
    if (scope.rfind(prefix, 0) != 0) continue;
    for (const auto& [subject, rating] : ratings) {
      auto& a = agg[subject];
      a.subject = subject;
      a.mean += rating;
      a.sample_count += 1;
    }
  }
  std::vector<ApproachAggregate> out;
  for (auto& [s, a] : agg) {
    if (a.sample_count > 0) a.mean /= a.sample_count;
    out.push_back(a);
  }
  return out;
}

}  // namespace optarena

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "optarena/arena.hpp"
#include "test_util.hpp"

using namespace optarena;
using namespace optarena::testutil;

TEST_CASE("elo_update matches the closed-form expectation") {
  // Oracle computed independently: E_a = 1/(1+10^((1000-1200)/400)).
  double expected_a = 1.0 / (1.0 + std::pow(10.0, -0.5));
  auto [ra, rb] = elo_update(1200.0, 1000.0, 0.0, 32.0);
  CHECK(ra == doctest::Approx(1200.0 + 32.0 * (0.0 - expected_a)).epsilon(1e-12));
  CHECK(ra == doctest::Approx(1175.6880983472653).epsilon(1e-12));
  CHECK(rb == doctest::Approx(1024.3119016527347).epsilon(1e-12));
}

TEST_CASE("elo_update edge behavior") {
  // A draw between equals changes nothing.
  auto [ra, rb] = elo_update(1000.0, 1000.0, 0.5, 32.0);
  CHECK(ra == 1000.0);
  CHECK(rb == 1000.0);
  // A win between equals transfers exactly k/2.
  auto [wa, wb] = elo_update(1000.0, 1000.0, 1.0, 32.0);
  CHECK(wa == doctest::Approx(1016.0));
  CHECK(wb == doctest::Approx(984.0));
}

TEST_CASE("elo_update is exactly zero-sum over random sequences") {
  std::mt19937_64 rng(11);
  double a = 1000.0, b = 1000.0;
  for (int i = 0; i < 500; ++i) {
    double score = static_cast<double>(rng() % 3) / 2.0;
    std::tie(a, b) = elo_update(a, b, score, 32.0);
    CHECK(a + b == 2000.0);  // delta mirroring makes this bit-exact
  }
}

TEST_CASE("verdict parsing is strict") {
  CHECK(*parse_verdict("1") == 1);
  CHECK(*parse_verdict("  2 \n") == 2);
  CHECK(*parse_verdict("reasoning...\n1\n") == 1);
  CHECK(!parse_verdict("Candidate 1 is better"));
  CHECK(!parse_verdict("12"));
  CHECK(!parse_verdict(""));
  CHECK(!parse_verdict("one"));
}

namespace {

struct JudgeRig {
  ExperimentConfig cfg = mock_config();
  MockBackend mock;
  RunLedger ledger;
  ModelGateway gateway;
  PairJudge judge;

  explicit JudgeRig(const std::string& tag,
                    std::function<void(MockBackend&)> tweak = {})
      : mock(make_mock(cfg)),
        ledger(fresh_ledger(tag)),
        gateway((tweak ? (tweak(mock), cfg.agents) : cfg.agents), mock, ledger, cfg.retry),
        judge(gateway, cfg.judge_agent, cfg.templates) {}
};

TournamentEntry entry(const std::string& id, const std::string& subject, double quality) {
  return {id, subject, "// candidate " + id + "\n" + format_quality_marker(quality)};
}

}  // namespace

TEST_CASE("judge_pair awards decisive wins to the planted better candidate") {
  JudgeRig rig("arena_pair");
  auto high = entry("v_high", "moa", 0.9);
  auto low = entry("v_low", "ga", 0.1);
  auto fwd = rig.judge.judge_pair("orig", high, low, {}, 7);
  REQUIRE(fwd.score_a);
  CHECK(*fwd.score_a == 1.0);
  CHECK(fwd.call_ids.size() == 2);  // order-swap double judging
  auto rev = rig.judge.judge_pair("orig", low, high, {}, 8);
  REQUIRE(rev.score_a);
  CHECK(*rev.score_a == 0.0);
}

TEST_CASE("identical candidates short-circuit to a draw with zero judge calls") {
  JudgeRig rig("arena_self");
  auto a = entry("v_same", "moa", 0.9);
  auto before = rig.gateway.calls_made();
  auto out = rig.judge.judge_pair("orig", a, a, {}, 7);
  REQUIRE(out.score_a);
  CHECK(*out.score_a == 0.5);
  CHECK(out.call_ids.empty());
  CHECK(rig.gateway.calls_made() == before);
}

TEST_CASE("a position-biased judge is neutralized to a draw") {
  JudgeRig rig("arena_bias", [](MockBackend& mock) {
    mock.profiles.at("judge").position_bias = true;
  });
  // Equal quality, distinct content: a biased judge answers "1" both times,
  // which maps to one win each under order swapping -> 0.5.
  auto a = entry("v_a", "moa", 0.5);
  auto b = entry("v_b", "ga", 0.5);
  auto out = rig.judge.judge_pair("orig", a, b, {}, 7);
  REQUIRE(out.score_a);
  CHECK(*out.score_a == 0.5);
  CHECK(out.call_ids.size() == 2);
}

TEST_CASE("a dead judge fails the match instead of inventing a result") {
  JudgeRig rig("arena_dead", [](MockBackend& mock) {
    mock.fail_agent = "judge";
    mock.fail_prompt_substring = "Candidate 1:";
  });
  auto out = rig.judge.judge_pair("orig", entry("v_a", "moa", 0.9),
                                  entry("v_b", "ga", 0.1), {}, 7);
  CHECK(!out.score_a);
}

namespace {

// Scripted transitive judge: higher planted strength always wins.
JudgeFn strength_judge(std::map<std::string, double> strength, int* calls = nullptr) {
  return [strength, calls](const TournamentEntry& a, const TournamentEntry& b, int) {
    if (calls) ++*calls;
    JudgeOutcome out;
    double sa = strength.at(a.subject), sb = strength.at(b.subject);
    out.score_a = sa > sb ? 1.0 : (sa < sb ? 0.0 : 0.5);
    return out;
  };
}

}  // namespace

TEST_CASE("round robin over n=5 plays exactly 10 matches per round") {
  std::vector<TournamentEntry> entries;
  std::map<std::string, double> strength;
  for (int i = 0; i < 5; ++i) {
    std::string s = "subj" + std::to_string(i);
    entries.push_back({"v" + std::to_string(i), s, "c" + std::to_string(i)});
    strength[s] = i;
  }
  int calls = 0;
  auto result = run_tournament("snip", entries, strength_judge(strength, &calls), {}, "scope");
  CHECK(calls == 10);
  CHECK(result.matches.size() == 10);
  CHECK(result.failed_matches == 0);
  SUBCASE("two rounds double the match count") {
    TournamentParams params;
    params.rounds = 2;
    auto two = run_tournament("snip", entries, strength_judge(strength), params, "scope");
    CHECK(two.matches.size() == 20);
  }
}

TEST_CASE("planted transitive order is recovered and rating mass conserved") {
  std::vector<TournamentEntry> entries = {
      {"v1", "weak", "a"}, {"v2", "mid", "b"}, {"v3", "strong", "c"}};
  std::map<std::string, double> strength{{"weak", 0.0}, {"mid", 1.0}, {"strong", 2.0}};
  for (double k : {16.0, 32.0}) {
    TournamentParams params;
    params.k_factor = k;
    auto result = run_tournament("snip", entries, strength_judge(strength), params, "scope");
    CHECK(result.ratings.at("strong") > result.ratings.at("mid"));
    CHECK(result.ratings.at("mid") > result.ratings.at("weak"));
    double sum = 0.0;
    for (const auto& [s, r] : result.ratings) sum += r;
    CHECK(sum == doctest::Approx(3000.0).epsilon(1e-12));
  }
}

TEST_CASE("all-draw tournaments leave every rating at the initial value") {
  std::vector<TournamentEntry> entries = {
      {"v1", "a", "x"}, {"v2", "b", "y"}, {"v3", "c", "z"}};
  auto result = run_tournament(
      "snip", entries,
      [](const TournamentEntry&, const TournamentEntry&, int) {
        JudgeOutcome out;
        out.score_a = 0.5;
        return out;
      },
      {}, "scope");
  for (const auto& [s, r] : result.ratings) CHECK(r == 1000.0);
}

TEST_CASE("failed matches are counted and skipped") {
  std::vector<TournamentEntry> entries = {{"v1", "a", "x"}, {"v2", "b", "y"}};
  auto result = run_tournament(
      "snip", entries,
      [](const TournamentEntry&, const TournamentEntry&, int) { return JudgeOutcome{}; },
      {}, "scope");
  CHECK(result.matches.empty());
  CHECK(result.failed_matches == 1);
  CHECK(result.ratings.at("a") == 1000.0);
}

TEST_CASE("tournaments with fewer than two entries are not rated") {
  auto result = run_tournament("snip", {{"v1", "a", "x"}},
                               [](const TournamentEntry&, const TournamentEntry&, int) {
                                 return JudgeOutcome{};
                               },
                               {}, "scope");
  CHECK(!result.rated);
  CHECK(result.ratings.size() <= 1);
}

TEST_CASE("match order is canonical regardless of entry order") {
  std::map<std::string, double> strength{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
  std::vector<TournamentEntry> fwd = {{"v1", "a", "x"}, {"v2", "b", "y"}, {"v3", "c", "z"}};
  std::vector<TournamentEntry> shuffled = {fwd[2], fwd[0], fwd[1]};
  auto r1 = run_tournament("snip", fwd, strength_judge(strength), {}, "scope");
  auto r2 = run_tournament("snip", shuffled, strength_judge(strength), {}, "scope");
  REQUIRE(r1.matches.size() == r2.matches.size());
  for (std::size_t i = 0; i < r1.matches.size(); ++i) {
    CHECK(r1.matches[i].variant_a == r2.matches[i].variant_a);
    CHECK(r1.matches[i].variant_b == r2.matches[i].variant_b);
  }
  CHECK(r1.ratings == r2.ratings);
}

TEST_CASE("ratings_to_ranks averages ties") {
  auto ranks = ratings_to_ranks({{"a", 1100.0}, {"b", 1100.0}, {"c", 900.0}});
  CHECK(ranks.at("a") == doctest::Approx(1.5));
  CHECK(ranks.at("b") == doctest::Approx(1.5));
  CHECK(ranks.at("c") == doctest::Approx(3.0));
  auto single = ratings_to_ranks({{"only", 1000.0}});
  CHECK(single.at("only") == doctest::Approx(1.0));
}

TEST_CASE("scope keys are stable strings") {
  CHECK(per_combination_scope("COMB1", "snip", 2) == "percomb|COMB1|snip|2");
  CHECK(cross_combination_scope({"COMB1", "COMB2"}, "snip", 1) ==
        "cross|COMB1+COMB2+|snip|1");
}

TEST_CASE("rank_per_combination averages ranks and counts exclusions") {
  auto ledger = fresh_ledger("arena_rank_agg");
  ledger.mark_tournament_complete(per_combination_scope("COMB1", "s1", 1),
                                  {{"moa", 1100.0}, {"ga", 1000.0}, {"individual:m", 900.0}}, 3);
  // Second pool is missing "ga" (its unit failed).
  ledger.mark_tournament_complete(per_combination_scope("COMB1", "s2", 1),
                                  {{"moa", 1050.0}, {"individual:m", 950.0}}, 1);
  auto agg = rank_per_combination(ledger, "COMB1", {"moa", "ga", "individual:m"});
  std::map<std::string, ApproachAggregate> by;
  for (const auto& a : agg) by[a.subject] = a;
  CHECK(by.at("moa").mean == doctest::Approx(1.0));
  CHECK(by.at("moa").sample_count == 2);
  CHECK(by.at("ga").mean == doctest::Approx(2.0));
  CHECK(by.at("ga").sample_count == 1);
  CHECK(by.at("ga").exclusions == 1);
  CHECK(by.at("individual:m").mean == doctest::Approx(2.5));  // ranks 3 and 2
}

TEST_CASE("rank_cross_combination averages ELO over complete pools only") {
  auto ledger = fresh_ledger("arena_cross_agg");
  ledger.mark_tournament_complete(cross_combination_scope({"COMB1", "COMB2"}, "s1", 1),
                                  {{"moa@COMB1", 1020.0}, {"ga@COMB2", 980.0}}, 1);
  ledger.mark_tournament_complete(cross_combination_scope({"COMB1", "COMB2"}, "s2", 1),
                                  {{"moa@COMB1", 1040.0}, {"ga@COMB2", 960.0}}, 1);
  // A per-combination tournament must be ignored by the cross aggregator.
  ledger.mark_tournament_complete(per_combination_scope("COMB1", "s1", 1),
                                  {{"moa", 2000.0}}, 0);
  auto agg = rank_cross_combination(ledger, {"COMB1", "COMB2"});
  std::map<std::string, double> means;
  for (const auto& a : agg) means[a.subject] = a.mean;
  REQUIRE(means.size() == 2);
  CHECK(means.at("moa@COMB1") == doctest::Approx(1030.0));
  CHECK(means.at("ga@COMB2") == doctest::Approx(970.0));
}

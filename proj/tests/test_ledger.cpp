#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "optarena/ledger.hpp"
#include "test_util.hpp"

using namespace optarena;
using namespace optarena::testutil;

namespace {

CallRecord sample_call(const std::string& snippet = "s") {
  CallRecord c;
  c.agent_name = "alpha";
  c.role = "individual";
  c.prompt_tokens = 100;
  c.completion_tokens = 50;
  c.cost = Money::parse_usd("0.001");
  c.latency_seconds = 0.25;
  c.snippet_id = snippet;
  c.approach_label = "individual:alpha";
  c.combination_id = "COMB1";
  c.repetition_index = 1;
  c.phase = "generate";
  return c;
}

}  // namespace

TEST_CASE("appends get strictly increasing sequence numbers") {
  auto dir = fresh_dir("ledger_seq");
  auto ledger = RunLedger::open(dir / "ledger", "r", "h", "t");
  auto s1 = ledger.append_snippet(sample_snippet(0));
  auto s2 = ledger.append_snippet(sample_snippet(1));
  CHECK(s2 > s1);
}

TEST_CASE("variant referencing a nonexistent call record is rejected") {
  auto ledger = fresh_ledger("ledger_ref");
  ledger.append_snippet(sample_snippet(0));
  OptimizationVariant v;
  v.id = "v";
  v.snippet_id = sample_snippet(0).id;
  v.approach = ApproachTag::moa();
  v.combination_id = "COMB1";
  v.content = "x";
  v.trace = {"c999"};
  CHECK_THROWS_AS(ledger.append_variant(v), std::runtime_error);
}

TEST_CASE("replay rebuilds identical state and comparison hash") {
  auto dir = fresh_dir("ledger_replay");
  std::string hash_before;
  {
    auto ledger = RunLedger::open(dir / "ledger", "r", "h", "t");
    ledger.append_snippet(sample_snippet(0));
    auto call_id = ledger.append_call(sample_call(sample_snippet(0).id));
    OptimizationVariant v;
    v.id = "v1";
    v.snippet_id = sample_snippet(0).id;
    v.approach = ApproachTag::ga();
    v.combination_id = "COMB1";
    v.content = "optimized";
    v.trace = {call_id};
    v.totals.prompt_tokens = 100;
    v.totals.completion_tokens = 50;
    v.totals.cost = Money::parse_usd("0.001");
    ledger.append_variant(v);
    ledger.mark_unit_complete({v.snippet_id, "ga", "COMB1", 1});
    hash_before = ledger.comparison_hash();
  }
  auto reopened = RunLedger::open_readonly(dir / "ledger");
  CHECK(reopened.comparison_hash() == hash_before);
  CHECK(reopened.snippets().size() == 1);
  CHECK(reopened.calls().size() == 1);
  CHECK(reopened.variants().size() == 1);
  CHECK(reopened.variants().at("v1").content == "optimized");
  CHECK(reopened.is_unit_complete({sample_snippet(0).id, "ga", "COMB1", 1}));
}

TEST_CASE("a partial trailing record is dropped on reopen and appends continue") {
  auto dir = fresh_dir("ledger_crash");
  std::int64_t intact_events;
  {
    auto ledger = RunLedger::open(dir / "ledger", "r", "h", "t");
    ledger.append_snippet(sample_snippet(0));
    ledger.append_call(sample_call());
    intact_events = ledger.event_count();
  }
  {
    std::ofstream out(dir / "ledger" / "events.jsonl", std::ios::app | std::ios::binary);
    out << "{\"type\":\"call\",\"id\":\"c99\",\"agent\":\"tr";  // torn write
  }
  auto ledger = RunLedger::open(dir / "ledger", "r", "h", "t");
  CHECK(ledger.event_count() == intact_events);
  CHECK_NOTHROW(ledger.append_call(sample_call()));
  auto reopened = RunLedger::open_readonly(dir / "ledger");
  CHECK(reopened.event_count() == intact_events + 1);
}

TEST_CASE("reconcile sums call records exactly") {
  auto ledger = fresh_ledger("ledger_reconcile");
  SUBCASE("empty ledger is all zero") {
    auto report = ledger.reconcile();
    CHECK(report.rows.empty());
    CHECK(report.total_calls == 0);
    CHECK(report.total_cost == Money::zero());
  }
  SUBCASE("seven calls of $0.001 total $0.007") {
    for (int i = 0; i < 7; ++i) ledger.append_call(sample_call());
    auto report = ledger.reconcile();
    CHECK(report.total_calls == 7);
    CHECK(report.total_cost == Money::parse_usd("0.007"));
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].prompt_tokens == 700);
    CHECK(report.rows[0].wall_time_seconds == doctest::Approx(1.75));
  }
}

TEST_CASE("completion and tournament markers are idempotent") {
  auto ledger = fresh_ledger("ledger_idem");
  UnitKey key{"s", "moa", "COMB1", 1};
  CHECK(ledger.mark_unit_complete(key) >= 0);
  CHECK(ledger.mark_unit_complete(key) == -1);
  CHECK(ledger.mark_tournament_complete("scope", {{"moa", 1010.0}}, 10) >= 0);
  CHECK(ledger.mark_tournament_complete("scope", {{"moa", 999.0}}, 10) == -1);
  CHECK(ledger.tournament_ratings().at("scope").at("moa") == doctest::Approx(1010.0));
}

TEST_CASE("re-ingesting an identical snippet is a no-op") {
  auto ledger = fresh_ledger("ledger_dup");
  CHECK(ledger.append_snippet(sample_snippet(0)) >= 0);
  CHECK(ledger.append_snippet(sample_snippet(0)) == -1);
  CHECK(ledger.snippets().size() == 1);
}

TEST_CASE("reopening with a different configuration hash is refused") {
  auto dir = fresh_dir("ledger_cfg");
  { auto ledger = RunLedger::open(dir / "ledger", "r", "hash-one", "t"); }
  CHECK_THROWS_AS(RunLedger::open(dir / "ledger", "r", "hash-two", "t"), std::runtime_error);
}

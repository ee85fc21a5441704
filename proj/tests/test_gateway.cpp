#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optarena/gateway.hpp"
#include "optarena/mock_backend.hpp"
#include "test_util.hpp"

using namespace optarena;
using namespace optarena::testutil;

namespace {

ChatRequest make_request(const std::string& agent, const std::string& prompt,
                         std::uint64_t seed = 0) {
  ChatRequest req;
  req.agent_name = agent;
  req.messages = {{"user", prompt}};
  req.request_seed = seed;
  return req;
}

// Scripted backend for retry and fallback paths.
struct ScriptedBackend : ChatBackend {
  std::vector<BackendResult> script;
  std::size_t calls = 0;
  BackendResult complete(const AgentSpec&, const ChatRequest&) override {
    BackendResult r = script.at(std::min(calls, script.size() - 1));
    ++calls;
    return r;
  }
};

AgentSpec plain_agent(const std::string& name) {
  AgentSpec a;
  a.name = name;
  a.pricing = Pricing::per_million_usd("2.00", "8.00");
  return a;
}

}  // namespace

TEST_CASE("extract_code_block handles the three stated shapes") {
  CHECK(*extract_code_block("intro\n```\na+b\n```\ndone") == "a+b");
  CHECK(*extract_code_block("```\nfirst\n```\ntext\n```\nsecond\n```\n") == "second");
  CHECK(*extract_code_block("x = 1\ny = 2") == "x = 1\ny = 2");
}

TEST_CASE("extract_code_block strips surrounding prose without fences") {
  auto got = extract_code_block("Here is the optimized version:\nx = compute()\nThis is faster.");
  REQUIRE(got);
  CHECK(*got == "x = compute()");
}

TEST_CASE("extract_code_block reports empty results") {
  CHECK(!extract_code_block(""));
  CHECK(!extract_code_block("Sorry, I cannot help with that."));
  CHECK(!extract_code_block("```\n\n```"));
}

TEST_CASE("mock backend is deterministic per request_seed") {
  auto cfg = mock_config();
  auto mock = make_mock(cfg);
  auto spec = plain_agent("alpha");
  auto r1 = mock.complete(spec, make_request("alpha", "optimize this", 9));
  auto r2 = mock.complete(spec, make_request("alpha", "optimize this", 9));
  auto r3 = mock.complete(spec, make_request("alpha", "optimize this", 10));
  REQUIRE(r1.ok);
  CHECK(r1.response.text == r2.response.text);
  CHECK(r1.response.prompt_tokens == r2.response.prompt_tokens);
  CHECK(r1.response.completion_tokens == r2.response.completion_tokens);
  CHECK(r1.response.text != r3.response.text);
}

TEST_CASE("mock latency follows the linear model") {
  MockProfile p;
  p.latency_fixed_seconds = 0.5;
  p.latency_per_token_seconds = 0.001;
  CHECK(mock_latency(p, 500) == doctest::Approx(1.0));
  CHECK(mock_latency(p, 0) == doctest::Approx(0.5));
}

TEST_CASE("three distinct profiles yield three distinct outputs for one snippet") {
  auto cfg = mock_config();
  auto mock = make_mock(cfg);
  std::set<std::string> codes;
  for (const std::string name : {"alpha", "bravo", "charlie"}) {
    auto r = mock.complete(plain_agent(name), make_request(name, "optimize: x = 1", 1));
    REQUIRE(r.ok);
    codes.insert(*extract_code_block(r.response.text));
  }
  CHECK(codes.size() == 3);
}

TEST_CASE("gateway records one call record per complete(), with exact cost") {
  auto cfg = mock_config();
  auto mock = make_mock(cfg);
  auto ledger = fresh_ledger("gw_cost");
  ModelGateway gateway(cfg.agents, mock, ledger, cfg.retry);
  CallContext ctx{CallRole::individual, 0, {"snip", "individual:alpha", "COMB1", 1}, "generate"};
  auto result = gateway.complete(make_request("alpha", "optimize me"), ctx);
  REQUIRE(result.ok);
  CHECK(ledger.calls().size() == 1);
  const auto& record = ledger.calls().at(result.call_id);
  auto expected = cfg.agents.at("alpha").pricing.cost(record.prompt_tokens,
                                                      record.completion_tokens);
  CHECK(record.cost == expected);
  CHECK(record.outcome.success);
  CHECK(record.phase == "generate");
}

TEST_CASE("live usage report drives the documented pricing example") {
  ScriptedBackend backend;
  BackendResult ok;
  ok.ok = true;
  ok.response.text = "```\ncode\n```";
  ok.response.prompt_tokens = 1000;
  ok.response.completion_tokens = 500;
  ok.response.usage_reported = true;
  backend.script = {ok};
  auto ledger = fresh_ledger("gw_usage");
  std::map<std::string, AgentSpec> agents{{"m", plain_agent("m")}};
  ModelGateway gateway(agents, backend, ledger, {});
  auto result = gateway.complete(make_request("m", "p"), {});
  REQUIRE(result.ok);
  CHECK(ledger.calls().at(result.call_id).cost == Money::parse_usd("0.006"));
}

TEST_CASE("missing usage falls back to bytes/4 and is flagged estimated") {
  ScriptedBackend backend;
  BackendResult ok;
  ok.ok = true;
  ok.response.text = std::string(40, 'x');  // 10 estimated tokens
  ok.response.usage_reported = false;
  backend.script = {ok};
  auto ledger = fresh_ledger("gw_fallback");
  std::map<std::string, AgentSpec> agents{{"m", plain_agent("m")}};
  ModelGateway gateway(agents, backend, ledger, {});
  auto result = gateway.complete(make_request("m", "p"), {});
  REQUIRE(result.ok);
  const auto& record = ledger.calls().at(result.call_id);
  CHECK(record.completion_tokens == 10);
  CHECK(record.tokens_estimated);
}

TEST_CASE("retryable failures are retried; terminal failure is recorded once") {
  ScriptedBackend backend;
  BackendResult timeout;
  timeout.error_kind = "timeout";
  timeout.retryable = true;
  BackendResult ok;
  ok.ok = true;
  ok.response.text = "fine";
  ok.response.usage_reported = false;
  backend.script = {timeout, timeout, ok};
  auto ledger = fresh_ledger("gw_retry");
  std::map<std::string, AgentSpec> agents{{"m", plain_agent("m")}};
  RetryPolicy retry;
  retry.max_attempts = 3;
  retry.backoff_base_seconds = 0.0;
  ModelGateway gateway(agents, backend, ledger, retry);
  auto result = gateway.complete(make_request("m", "p"), {});
  CHECK(result.ok);
  CHECK(backend.calls == 3);
  CHECK(ledger.calls().size() == 1);  // one logical call record

  // Exhausted retries leave a failure record, never a silent drop.
  backend.script = {timeout};
  backend.calls = 0;
  auto failed = gateway.complete(make_request("m", "p"), {});
  CHECK(!failed.ok);
  CHECK(failed.failure_reason == "timeout");
  CHECK(ledger.calls().size() == 2);
  CHECK(!ledger.calls().at(failed.call_id).outcome.success);
}

TEST_CASE("malformed responses are not retried") {
  ScriptedBackend backend;
  BackendResult bad;
  bad.error_kind = "malformed";
  bad.retryable = false;
  backend.script = {bad};
  auto ledger = fresh_ledger("gw_malformed");
  std::map<std::string, AgentSpec> agents{{"m", plain_agent("m")}};
  ModelGateway gateway(agents, backend, ledger, {});
  auto result = gateway.complete(make_request("m", "p"), {});
  CHECK(!result.ok);
  CHECK(backend.calls == 1);
}

TEST_CASE("request validation") {
  ChatRequest no_user;
  no_user.agent_name = "m";
  no_user.messages = {{"system", "hi"}};
  CHECK_THROWS_AS(no_user.validate(), std::invalid_argument);
  ChatRequest empty;
  empty.agent_name = "m";
  empty.messages = {{"user", ""}};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("mock judge prefers the planted higher quality in both orderings") {
  auto cfg = mock_config();
  auto mock = make_mock(cfg);
  std::string high = "// code\n" + format_quality_marker(0.9);
  std::string low = "// code\n" + format_quality_marker(0.1);
  auto ask = [&](const std::string& c1, const std::string& c2) {
    std::string prompt = render_template(cfg.templates.judge, {{"snippet", "orig"},
                                                               {"candidate_1", c1},
                                                               {"candidate_2", c2}});
    auto r = mock.complete(plain_agent("judge"), make_request("judge", prompt));
    REQUIRE(r.ok);
    return r.response.text;
  };
  CHECK(ask(high, low) == "1");
  CHECK(ask(low, high) == "2");
}

#pragma once

#include <chrono>
#include <cstdint>
#include <atomic>
#include <map>
#include <optional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "optarena/domain.hpp"
#include "optarena/ledger.hpp"
#include "optarena/sha256.hpp"

namespace optarena {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
};

struct ChatRequest {
  std::string agent_name;
  std::vector<ChatMessage> messages;
  std::optional<Sampling> sampling_override;
  std::uint64_t request_seed = 0;  // consumed by the mock backend only

  void validate() const {
    bool has_user = false;
    std::size_t total = 0;
    for (const auto& m : messages) {
      if (m.role == "user") has_user = true;
      total += m.text.size();
    }
    if (!has_user) throw std::invalid_argument("chat request needs at least one user message");
    if (total == 0) throw std::invalid_argument("chat request prompt is empty");
  }

  std::string prompt_text() const {
    std::string out;
    for (const auto& m : messages) {
      out += m.role;
      out += ":\n";
      out += m.text;
      out += "\n";
    }
    return out;
  }
};

struct ChatResponse {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_seconds = 0.0;
  bool usage_reported = true;  // false -> token counts are the bytes/4 estimate
};

struct BackendResult {
  bool ok = false;
  ChatResponse response;
  std::string error_kind;  // "timeout" | "rate_limited" | "malformed"
  bool retryable = false;
};

// Transport abstraction: live HTTP endpoint or deterministic mock.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendResult complete(const AgentSpec& agent, const ChatRequest& request) = 0;
};

// Fallback token estimate when an endpoint omits usage: bytes/4, rounded up.
inline std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

namespace detail {
inline bool looks_like_prose(const std::string& line) {
  if (line.find_first_not_of(" \t\r") == std::string::npos) return true;
  if (line.find_first_of("={}();<>[]") != std::string::npos) return false;
  char last = line[line.find_last_not_of(" \t\r")];
  return last == '.' || last == ':';
}
}  // namespace detail

// Pulls the final code out of a model reply: the content of the last fenced
// block if one exists, otherwise the reply with leading/trailing prose lines
// stripped (a prose line has no code punctuation and ends with '.' or ':').
// Returns nullopt when nothing remains.
inline std::optional<std::string> extract_code_block(const std::string& text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t body_start = text.find('\n', open);
    if (body_start == std::string::npos) break;
    ++body_start;  // skip fence line (may carry a language tag)
    std::size_t close = text.find("```", body_start);
    if (close == std::string::npos) break;
    std::string body = text.substr(body_start, close - body_start);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    blocks.push_back(std::move(body));
    pos = close + 3;
  }
  std::string result;
  if (!blocks.empty()) {
    result = blocks.back();
  } else {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
    std::size_t lo = 0, hi = lines.size();
    while (lo < hi && detail::looks_like_prose(lines[lo])) ++lo;
    while (hi > lo && detail::looks_like_prose(lines[hi - 1])) --hi;
    for (std::size_t i = lo; i < hi; ++i) {
      result += lines[i];
      if (i + 1 < hi) result += "\n";
    }
  }
  if (result.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return result;
}

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_seconds = 0.5;  // 0 disables sleeping (mock/tests)
  std::uint64_t jitter_seed = 0;
};

// Thrown by the crash-injection hook; simulates an abrupt process kill for
// resume testing.
struct InjectedCrash : std::runtime_error {
  InjectedCrash() : std::runtime_error("injected crash") {}
};

// Attribution of a model call to its experimental unit.
struct CallContext {
  CallRole role = CallRole::individual;
  int role_index = 0;  // layer or generation number where applicable
  UnitKey unit;
  std::string phase = "generate";  // or "evaluate"
};

// Front door for all model traffic. Resolves the agent, drives retries, and
// records exactly one CallRecord per logical call, success or failure.
class ModelGateway {
 public:
  struct CallResult {
    bool ok = false;
    std::string call_id;
    ChatResponse response;
    std::string failure_reason;
  };

  ModelGateway(std::map<std::string, AgentSpec> agents, ChatBackend& backend,
               RunLedger& ledger, RetryPolicy retry = {})
      : agents_(std::move(agents)), backend_(backend), ledger_(ledger), retry_(retry),
        jitter_rng_(retry.jitter_seed) {}

  const AgentSpec& agent(const std::string& name) const {
    auto it = agents_.find(name);
    if (it == agents_.end()) throw std::invalid_argument("unknown agent: " + name);
    return it->second;
  }

  const CallRecord& ledger_call(const std::string& call_id) const {
    return ledger_.calls().at(call_id);
  }

  // Test hook: throw InjectedCrash once this many calls have completed.
  void set_crash_after_calls(std::int64_t n) { crash_after_calls_ = n; }

  std::int64_t calls_made() const { return calls_made_; }

  CallResult complete(const ChatRequest& request, const CallContext& ctx) {
    if (crash_after_calls_ && calls_made_ >= *crash_after_calls_) throw InjectedCrash();
    request.validate();
    const AgentSpec& spec = agent(request.agent_name);

    BackendResult result;
    for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
      if (attempt > 0 && retry_.backoff_base_seconds > 0) {
        double delay = retry_.backoff_base_seconds * static_cast<double>(1 << (attempt - 1));
        {
          std::lock_guard lock(rng_mu_);
          std::uniform_real_distribution<double> jitter(0.0, delay * 0.25);
          delay += jitter(jitter_rng_);
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      result = backend_.complete(spec, request);
      if (result.ok || !result.retryable) break;
    }

    CallRecord record;
    record.agent_name = spec.name;
    record.role = role_label(ctx.role, ctx.role_index);
    record.snippet_id = ctx.unit.snippet_id;
    record.approach_label = ctx.unit.approach_label;
    record.combination_id = ctx.unit.combination_id;
    record.repetition_index = ctx.unit.repetition_index;
    record.phase = ctx.phase;

    CallResult out;
    if (result.ok) {
      ChatResponse& resp = result.response;
      if (!resp.usage_reported) {
        resp.prompt_tokens = estimate_tokens(request.prompt_text());
        resp.completion_tokens = estimate_tokens(resp.text);
        record.tokens_estimated = true;
      }
      record.prompt_tokens = resp.prompt_tokens;
      record.completion_tokens = resp.completion_tokens;
      record.latency_seconds = resp.latency_seconds;
      record.cost = spec.pricing.cost(resp.prompt_tokens, resp.completion_tokens);
      record.outcome = {true, ""};
      out.ok = true;
      out.response = resp;
    } else {
      record.outcome = {false, result.error_kind};
      out.failure_reason = result.error_kind;
    }
    out.call_id = ledger_.append_call(record);
    ++calls_made_;
    return out;
  }

 private:
  std::map<std::string, AgentSpec> agents_;
  ChatBackend& backend_;
  RunLedger& ledger_;
  RetryPolicy retry_;
  std::mutex rng_mu_;
  std::mt19937_64 jitter_rng_;
  std::atomic<std::int64_t> calls_made_ = 0;
  std::optional<std::int64_t> crash_after_calls_;
};

}  // namespace optarena

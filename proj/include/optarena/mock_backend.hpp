#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>

#include "optarena/gateway.hpp"
#include "optarena/sha256.hpp"

namespace optarena {

// Deterministic stand-in for a model endpoint. Generation output embeds a
// quality marker so the mock judge has a planted ground truth; everything is
// reproducible from (transform_seed, request_seed, prompt hash).
struct MockProfile {
  std::string agent_name;
  double quality_score = 0.5;  // in [0,1]
  double latency_fixed_seconds = 0.0;
  double latency_per_token_seconds = 0.0;
  std::uint64_t transform_seed = 0;
  bool position_bias = false;  // as judge: break ties by always answering "1"
};

inline constexpr const char* kQualityMarkerPrefix = "// @@q=";
inline constexpr const char* kQualityMarkerSuffix = "@@";

inline std::string format_quality_marker(double q) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%.6f%s", kQualityMarkerPrefix, q, kQualityMarkerSuffix);
  return buf;
}

inline std::optional<double> parse_quality_marker(const std::string& text, std::size_t from = 0) {
  std::size_t pos = text.find(kQualityMarkerPrefix, from);
  if (pos == std::string::npos) return std::nullopt;
  return std::atof(text.c_str() + pos + std::string(kQualityMarkerPrefix).size());
}

inline double mock_latency(const MockProfile& p, std::int64_t completion_tokens) {
  return p.latency_fixed_seconds + p.latency_per_token_seconds * static_cast<double>(completion_tokens);
}

class MockBackend : public ChatBackend {
 public:
  std::map<std::string, MockProfile> profiles;

  // Planted-fitness hook: prompts containing boost_phrase yield generation
  // quality raised by boost_amount (clamped to [0,1]).
  std::string boost_phrase;
  double boost_amount = 0.0;

  // Targeted failure injection: calls by fail_agent whose prompt contains
  // fail_prompt_substring come back as malformed (non-retryable).
  std::string fail_agent;
  std::string fail_prompt_substring;

  BackendResult complete(const AgentSpec& agent, const ChatRequest& request) override {
    auto it = profiles.find(agent.name);
    if (it == profiles.end()) {
      BackendResult r;
      r.error_kind = "malformed";
      return r;
    }
    const MockProfile& profile = it->second;
    const std::string prompt = request.prompt_text();

    if (!fail_agent.empty() && agent.name == fail_agent &&
        prompt.find(fail_prompt_substring) != std::string::npos) {
      BackendResult r;
      r.error_kind = "malformed";
      return r;
    }

    BackendResult r;
    r.ok = true;
    if (is_judge_prompt(prompt)) {
      r.response.text = judge_verdict(profile, prompt);
    } else {
      r.response.text = generate(profile, request, prompt);
    }
    r.response.prompt_tokens = estimate_tokens(prompt);
    r.response.completion_tokens = estimate_tokens(r.response.text);
    r.response.latency_seconds = mock_latency(profile, r.response.completion_tokens);
    r.response.usage_reported = true;
    return r;
  }

 private:
  static bool is_judge_prompt(const std::string& prompt) {
    return prompt.find("Candidate 1:") != std::string::npos &&
           prompt.find("Candidate 2:") != std::string::npos &&
           prompt.find("Respond with exactly one character") != std::string::npos;
  }

  std::string generate(const MockProfile& profile, const ChatRequest& request,
                       const std::string& prompt) const {
    double quality = profile.quality_score;
    if (!boost_phrase.empty() && prompt.find(boost_phrase) != std::string::npos)
      quality = std::clamp(quality + boost_amount, 0.0, 1.0);
    Sha256 h;
    h.update(profile.agent_name);
    h.update("|");
    h.update(std::to_string(profile.transform_seed));
    h.update("|");
    h.update(std::to_string(request.request_seed));
    h.update("|");
    h.update(prompt);
    std::string tag = h.hex_digest().substr(0, 16);
    std::string code = "// mock-optimized " + tag + "\n" +
                       "int optimized_" + tag.substr(0, 8) + "() { return 0; }\n" +
                       format_quality_marker(quality) + "\n";
    return "Here is the optimized version.\n```\n" + code + "```\n";
  }

  // Picks the candidate with the higher planted quality. Ties break on
  // candidate content (order-independent) unless position_bias is set, in
  // which case the first-listed candidate always wins the tie.
  std::string judge_verdict(const MockProfile& profile, const std::string& prompt) const {
    std::size_t c1 = prompt.find("Candidate 1:");
    std::size_t c2 = prompt.find("Candidate 2:");
    auto q1 = parse_quality_marker(prompt, c1);
    auto q2 = parse_quality_marker(prompt, c2);
    double a = q1.value_or(0.0), b = q2.value_or(0.0);
    if (a > b) return "1";
    if (b > a) return "2";
    if (profile.position_bias) return "1";
    return fenced_body(prompt, c1) <= fenced_body(prompt, c2) ? "1" : "2";
  }

  static std::string fenced_body(const std::string& prompt, std::size_t from) {
    std::size_t open = prompt.find("```", from);
    if (open == std::string::npos) return "";
    std::size_t start = prompt.find('\n', open);
    if (start == std::string::npos) return "";
    ++start;
    std::size_t close = prompt.find("```", start);
    if (close == std::string::npos) return "";
    return prompt.substr(start, close - start);
  }
};

}  // namespace optarena

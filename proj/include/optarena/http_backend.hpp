#pragma once

#include <chrono>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "optarena/gateway.hpp"

namespace optarena {

// One configured live endpoint. Secrets never live in config files; auth_env
// names the environment variable holding the API key.
struct EndpointConfig {
  std::string id;
  std::string base_url;  // e.g. "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string model;     // wire-level model identifier
  std::string auth_env;  // env var with the bearer token; empty = no auth
  double timeout_seconds = 120.0;
  int concurrency_cap = 4;
};

// Live chat-completions client. Request body: {"model", "messages":
// [{"role","content"}...], "temperature", "max_tokens"}; response:
// choices[0].message.content plus usage.{prompt_tokens,completion_tokens}.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(std::map<std::string, EndpointConfig> endpoints)
      : endpoints_(std::move(endpoints)) {}

  BackendResult complete(const AgentSpec& agent, const ChatRequest& request) override {
    BackendResult out;
    auto it = endpoints_.find(agent.endpoint_id);
    if (it == endpoints_.end()) {
      out.error_kind = "malformed";
      return out;
    }
    const EndpointConfig& ep = it->second;

    nlohmann::json body;
    body["model"] = ep.model;
    auto& messages = body["messages"];
    for (const auto& m : request.messages)
      messages.push_back({{"role", m.role}, {"content", m.text}});
    const Sampling& sampling = request.sampling_override.value_or(agent.sampling);
    body["temperature"] = sampling.temperature;
    body["max_tokens"] = sampling.max_output_tokens;

    httplib::Client client(ep.base_url);
    client.set_read_timeout(std::chrono::duration<double>(ep.timeout_seconds));
    client.set_connection_timeout(std::chrono::duration<double>(ep.timeout_seconds));
    httplib::Headers headers;
    if (!ep.auth_env.empty()) {
      const char* token = std::getenv(ep.auth_env.c_str());
      if (!token) throw std::runtime_error("missing auth env var " + ep.auth_env +
                                           " for endpoint " + ep.id);
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    auto t1 = std::chrono::steady_clock::now();
    double latency = std::chrono::duration<double>(t1 - t0).count();

    if (!res) {
      out.error_kind = "timeout";
      out.retryable = true;
      return out;
    }
    if (res->status == 429 || res->status == 503) {
      out.error_kind = "rate_limited";
      out.retryable = true;
      return out;
    }
    if (res->status != 200) {
      out.error_kind = "malformed";
      return out;
    }
    auto payload = nlohmann::json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("choices") || payload["choices"].empty()) {
      out.error_kind = "malformed";
      return out;
    }
    const auto& choice = payload["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")) {
      out.error_kind = "malformed";
      return out;
    }
    out.response.text = choice["message"]["content"].get<std::string>();
    if (out.response.text.empty()) {
      out = {};
      out.error_kind = "malformed";
      return out;
    }
    out.response.latency_seconds = latency;
    if (payload.contains("usage") && payload["usage"].contains("prompt_tokens") &&
        payload["usage"].contains("completion_tokens")) {
      out.response.prompt_tokens = payload["usage"]["prompt_tokens"].get<std::int64_t>();
      out.response.completion_tokens = payload["usage"]["completion_tokens"].get<std::int64_t>();
      out.response.usage_reported = true;
    } else {
      out.response.usage_reported = false;  // gateway applies the bytes/4 estimate
    }
    out.ok = true;
    return out;
  }

 private:
  std::map<std::string, EndpointConfig> endpoints_;
};

}  // namespace optarena

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "optarena/domain.hpp"
#include "optarena/ga.hpp"
#include "optarena/http_backend.hpp"
#include "optarena/mock_backend.hpp"
#include "optarena/prompts.hpp"

namespace optarena {

// Full experiment configuration; see the README for the schema and defaults.
struct ExperimentConfig {
  std::string snippet_manifest;
  std::filesystem::path output_dir = "out";
  std::uint64_t global_seed = 0;
  int repetitions = 5;
  bool mock_mode = false;
  int workers = 1;

  std::vector<std::string> approaches = {"moa", "ga", "individual"};
  std::map<std::string, AgentSpec> agents;
  std::map<std::string, EndpointConfig> endpoints;
  std::vector<Combination> combinations;
  std::vector<std::string> cross_combination_ids;
  std::string judge_agent;

  int moa_layers = 3;
  GAParams ga;
  TournamentParams arena;
  RetryPolicy retry;

  // Mock backend settings (profiles keyed by agent name).
  std::map<std::string, MockProfile> mock_profiles;
  std::string mock_boost_phrase;
  double mock_boost_amount = 0.0;
  std::string mock_fail_agent;
  std::string mock_fail_prompt_substring;

  std::optional<std::string> fragment_library_path;
  PromptTemplates templates = PromptTemplates::defaults();

  nlohmann::json canonical;  // normalized source document, for hashing

  std::string hash() const { return sha256_hex(canonical.dump()); }

  std::vector<std::string> fragment_library() const {
    return fragment_library_path ? load_fragment_library(*fragment_library_path)
                                 : default_fragment_library();
  }

  void validate() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (combinations.empty()) throw std::invalid_argument("at least one combination is required");
    auto require_agent = [&](const std::string& name, const std::string& where) {
      if (!agents.count(name))
        throw std::invalid_argument(where + " references unknown agent: " + name);
    };
    for (const auto& c : combinations) {
      c.validate();
      for (const auto& p : c.proposers) require_agent(p, "combination " + c.id);
      require_agent(c.aggregator, "combination " + c.id);
    }
    if (judge_agent.empty()) throw std::invalid_argument("judge_agent is required");
    require_agent(judge_agent, "judge_agent");
    std::set<std::string> comb_ids;
    for (const auto& c : combinations) {
      if (!comb_ids.insert(c.id).second)
        throw std::invalid_argument("duplicate combination id " + c.id);
    }
    for (const auto& id : cross_combination_ids)
      if (!comb_ids.count(id))
        throw std::invalid_argument("cross_combinations references unknown combination " + id);
    for (const auto& [name, a] : agents) {
      if (a.pricing.prompt_picos_per_token < 0 || a.pricing.completion_picos_per_token < 0)
        throw std::invalid_argument("agent " + name + " has negative pricing");
      if (!mock_mode && !endpoints.count(a.endpoint_id))
        throw std::invalid_argument("agent " + name + " references unknown endpoint " + a.endpoint_id);
      if (mock_mode && !mock_profiles.count(name))
        throw std::invalid_argument("mock mode: agent " + name + " has no mock profile");
    }
    for (const auto& [name, p] : mock_profiles)
      if (p.quality_score < 0.0 || p.quality_score > 1.0)
        throw std::invalid_argument("mock profile " + name + " quality must be in [0,1]");
    for (const auto& a : approaches)
      if (a != "moa" && a != "ga" && a != "individual")
        throw std::invalid_argument("unknown approach: " + a);
    ga.validate();
  }
};

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  cfg.canonical = doc;
  cfg.snippet_manifest = doc.value("snippet_manifest", "");
  cfg.output_dir = doc.value("output_dir", "out");
  cfg.global_seed = doc.value("global_seed", std::uint64_t{0});
  cfg.repetitions = doc.value("repetitions", 5);
  cfg.mock_mode = doc.value("mock_mode", false);
  cfg.workers = doc.value("workers", 1);
  if (doc.contains("approaches"))
    cfg.approaches = doc.at("approaches").get<std::vector<std::string>>();

  for (const auto& a : doc.value("agents", nlohmann::json::array())) {
    AgentSpec spec;
    spec.name = a.at("name");
    spec.endpoint_id = a.value("endpoint_id", "");
    spec.provenance_class = provenance_from_string(a.value("provenance_class", "open_source"));
    spec.sampling.temperature = a.value("temperature", 0.0);
    spec.sampling.max_output_tokens = a.value("max_output_tokens", 4096);
    if (a.contains("pricing")) {
      spec.pricing = Pricing::per_million_usd(
          a.at("pricing").value("prompt_usd_per_1m", "0"),
          a.at("pricing").value("completion_usd_per_1m", "0"));
    }
    if (cfg.agents.count(spec.name))
      throw std::invalid_argument("duplicate agent name " + spec.name);
    cfg.agents[spec.name] = std::move(spec);
  }

  for (const auto& e : doc.value("endpoints", nlohmann::json::array())) {
    EndpointConfig ep;
    ep.id = e.at("id");
    ep.base_url = e.value("base_url", "");
    ep.path = e.value("path", "/v1/chat/completions");
    ep.model = e.value("model", "");
    ep.auth_env = e.value("auth_env", "");
    ep.timeout_seconds = e.value("timeout_s", 120.0);
    ep.concurrency_cap = e.value("concurrency_cap", 4);
    cfg.endpoints[ep.id] = std::move(ep);
  }

  for (const auto& c : doc.value("combinations", nlohmann::json::array())) {
    Combination comb;
    comb.id = c.at("id");
    comb.proposers = c.at("proposers").get<std::vector<std::string>>();
    comb.aggregator = c.at("aggregator");
    cfg.combinations.push_back(std::move(comb));
  }
  if (doc.contains("cross_combinations"))
    cfg.cross_combination_ids = doc.at("cross_combinations").get<std::vector<std::string>>();
  cfg.judge_agent = doc.value("judge_agent", "");

  if (doc.contains("moa")) cfg.moa_layers = doc.at("moa").value("layers", 3);
  if (doc.contains("ga")) {
    const auto& g = doc.at("ga");
    cfg.ga.population_size = g.value("population_size", cfg.ga.population_size);
    cfg.ga.max_generations = g.value("max_generations", cfg.ga.max_generations);
    cfg.ga.stall_generations = g.value("stall_generations", cfg.ga.stall_generations);
    cfg.ga.mutation_rate = g.value("mutation_rate", cfg.ga.mutation_rate);
    cfg.ga.crossover_rate = g.value("crossover_rate", cfg.ga.crossover_rate);
    cfg.ga.tournament_size = g.value("tournament_size", cfg.ga.tournament_size);
    cfg.ga.max_genome_length = g.value("max_genome_length", cfg.ga.max_genome_length);
    cfg.ga.judge_pairs_per_generation =
        g.value("judge_pairs_per_generation", cfg.ga.judge_pairs_per_generation);
  }
  if (doc.contains("arena")) {
    const auto& a = doc.at("arena");
    cfg.arena.k_factor = a.value("k_factor", cfg.arena.k_factor);
    cfg.arena.rounds = a.value("rounds", cfg.arena.rounds);
    cfg.arena.initial_rating = a.value("initial_rating", cfg.arena.initial_rating);
  }
  if (doc.contains("retry")) {
    const auto& r = doc.at("retry");
    cfg.retry.max_attempts = r.value("max_attempts", cfg.retry.max_attempts);
    cfg.retry.backoff_base_seconds = r.value("backoff_base_s", cfg.retry.backoff_base_seconds);
  }
  if (doc.contains("mock")) {
    const auto& m = doc.at("mock");
    for (const auto& p : m.value("profiles", nlohmann::json::array())) {
      MockProfile profile;
      profile.agent_name = p.at("agent");
      profile.quality_score = p.value("quality", 0.5);
      profile.latency_fixed_seconds = p.value("latency_fixed_s", 0.0);
      profile.latency_per_token_seconds = p.value("latency_per_token_s", 0.0);
      profile.transform_seed = p.value("transform_seed", std::uint64_t{0});
      profile.position_bias = p.value("position_bias", false);
      cfg.mock_profiles[profile.agent_name] = std::move(profile);
    }
    cfg.mock_boost_phrase = m.value("boost_phrase", "");
    cfg.mock_boost_amount = m.value("boost_amount", 0.0);
    cfg.mock_fail_agent = m.value("fail_agent", "");
    cfg.mock_fail_prompt_substring = m.value("fail_prompt_substring", "");
  }
  if (doc.contains("fragment_library"))
    cfg.fragment_library_path = doc.at("fragment_library").get<std::string>();
  if (cfg.mock_mode) cfg.retry.backoff_base_seconds = 0.0;
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  return parse_config(doc);
}

}  // namespace optarena

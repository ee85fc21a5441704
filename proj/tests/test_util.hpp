#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "optarena/config.hpp"
#include "optarena/experiment.hpp"
#include "optarena/ledger.hpp"
#include "optarena/mock_backend.hpp"

namespace optarena::testutil {

inline std::filesystem::path fresh_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("optarena_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline RunLedger fresh_ledger(const std::string& tag) {
  return RunLedger::open(fresh_dir(tag) / "ledger", "test-run", "cfg-hash", "tpl-hash");
}

// A config with one combination of three mock proposers with strictly
// ordered qualities, a strong aggregator, and a deterministic judge.
inline ExperimentConfig mock_config() {
  nlohmann::json doc = {
      {"mock_mode", true},
      {"global_seed", 42},
      {"repetitions", 1},
      {"judge_agent", "judge"},
      {"approaches", {"moa", "ga", "individual"}},
      {"agents",
       {
           {{"name", "alpha"},
            {"pricing", {{"prompt_usd_per_1m", "2.00"}, {"completion_usd_per_1m", "8.00"}}}},
           {{"name", "bravo"},
            {"pricing", {{"prompt_usd_per_1m", "2.00"}, {"completion_usd_per_1m", "8.00"}}}},
           {{"name", "charlie"},
            {"pricing", {{"prompt_usd_per_1m", "2.00"}, {"completion_usd_per_1m", "8.00"}}}},
           {{"name", "agg"},
            {"pricing", {{"prompt_usd_per_1m", "2.00"}, {"completion_usd_per_1m", "8.00"}}}},
           {{"name", "judge"},
            {"pricing", {{"prompt_usd_per_1m", "0"}, {"completion_usd_per_1m", "0"}}}},
       }},
      {"combinations", {{{"id", "COMB1"}, {"proposers", {"alpha", "bravo", "charlie"}},
                         {"aggregator", "agg"}}}},
      {"ga",
       {{"population_size", 2}, {"max_generations", 2}, {"stall_generations", 1},
        {"max_genome_length", 3}}},
      {"mock",
       {{"profiles",
         {
             {{"agent", "alpha"}, {"quality", 0.7}, {"transform_seed", 1}},
             {{"agent", "bravo"}, {"quality", 0.6}, {"transform_seed", 2}},
             {{"agent", "charlie"}, {"quality", 0.5}, {"transform_seed", 3}},
             {{"agent", "agg"}, {"quality", 0.95}, {"transform_seed", 4}},
             {{"agent", "judge"}, {"quality", 0.5}, {"transform_seed", 5}},
         }},
        {"boost_phrase", "Apply the following optimization directives:"},
        {"boost_amount", 0.1}}},
  };
  return parse_config(doc);
}

inline MockBackend make_mock(const ExperimentConfig& cfg) {
  MockBackend mock;
  mock.profiles = cfg.mock_profiles;
  mock.boost_phrase = cfg.mock_boost_phrase;
  mock.boost_amount = cfg.mock_boost_amount;
  mock.fail_agent = cfg.mock_fail_agent;
  mock.fail_prompt_substring = cfg.mock_fail_prompt_substring;
  return mock;
}

inline CodeSnippet sample_snippet(int n = 0) {
  std::string content = "def work_" + std::to_string(n) + "(xs):\n" +
                        "    total = 0\n" +
                        "    for x in xs:\n" +
                        "        total = total + x * " + std::to_string(n + 2) + "\n" +
                        "    return total\n";
  return CodeSnippet::make("pkg/mod_" + std::to_string(n) + ".py", {1, 5}, "python", content);
}

inline void add_snippets(RunLedger& ledger, int count) {
  for (int i = 0; i < count; ++i) ledger.append_snippet(sample_snippet(i));
}

}  // namespace optarena::testutil

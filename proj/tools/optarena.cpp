#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "optarena/config.hpp"
#include "optarena/experiment.hpp"
#include "optarena/http_backend.hpp"
#include "optarena/ledger.hpp"
#include "optarena/mock_backend.hpp"

namespace {

using namespace optarena;

std::unique_ptr<ChatBackend> make_backend(const ExperimentConfig& cfg) {
  if (cfg.mock_mode) {
    auto mock = std::make_unique<MockBackend>();
    mock->profiles = cfg.mock_profiles;
    mock->boost_phrase = cfg.mock_boost_phrase;
    mock->boost_amount = cfg.mock_boost_amount;
    mock->fail_agent = cfg.mock_fail_agent;
    mock->fail_prompt_substring = cfg.mock_fail_prompt_substring;
    return mock;
  }
  return std::make_unique<HttpBackend>(cfg.endpoints);
}

RunLedger open_ledger(const ExperimentConfig& cfg) {
  return RunLedger::open(cfg.output_dir / "ledger", cfg.hash().substr(0, 12), cfg.hash(),
                         cfg.templates.version_hash());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch code-optimization orchestrator: MoA / GA / individual "
               "LLM optimizers with an ELO judge arena"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  bool mock_override = false;
  bool resume = false;
  app.add_option("--config", config_path, "Path to the experiment config (JSON)")->required();
  app.add_flag("--mock", mock_override, "Force mock mode (no network, no secrets)");
  app.add_option("--seed", seed_override, "Override the global seed")->each([&](const std::string&) {
    has_seed = true;
  });
  app.add_option("--output", output_override, "Override the output directory");
  app.add_flag("--resume", resume,
               "Continue an existing run ledger (resuming is the default; completed units are never redone)");

  auto* ingest_cmd = app.add_subcommand("ingest", "Read the snippet manifest into the store");
  auto* run_cmd = app.add_subcommand("run", "Generate optimization variants for all units");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run judge tournaments and persist ratings");
  auto* report_cmd = app.add_subcommand("report", "Emit report files from the ledger");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (mock_override) {
      cfg.mock_mode = true;
      cfg.canonical["mock_mode"] = true;
      cfg.retry.backoff_base_seconds = 0.0;
    }
    if (has_seed) {
      cfg.global_seed = seed_override;
      cfg.canonical["global_seed"] = seed_override;
    }
    if (!output_override.empty()) cfg.output_dir = output_override;
    cfg.validate();

    auto backend = make_backend(cfg);

    (void)resume;  // resuming is the ledger's default behavior
    if (*ingest_cmd) {
      RunLedger ledger = open_ledger(cfg);
      ExperimentRunner runner(cfg, ledger, *backend);
      auto base_dir = std::filesystem::path(config_path).parent_path();
      auto summary = runner.ingest(base_dir / cfg.snippet_manifest, base_dir);
      std::cout << "ingest: " << summary.stored << " stored, " << summary.duplicates
                << " duplicates, " << summary.errors << " errors\n";
      for (const auto& e : summary.error_lines) std::cerr << "  " << e << "\n";
      return summary.errors > 0 ? 2 : 0;
    }
    if (*run_cmd) {
      RunLedger ledger = open_ledger(cfg);
      ExperimentRunner runner(cfg, ledger, *backend);
      auto summary = runner.run();
      return summary.units_failed > 0 ? 2 : 0;
    }
    if (*evaluate_cmd) {
      RunLedger ledger = open_ledger(cfg);
      ExperimentRunner runner(cfg, ledger, *backend);
      runner.evaluate();
      return 0;
    }
    if (*report_cmd) {
      RunLedger ledger = RunLedger::open_readonly(cfg.output_dir / "ledger");
      ExperimentRunner runner(cfg, ledger, *backend);
      runner.report(cfg.output_dir / "reports");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "normsim/harness.hpp"

namespace {

namespace harness = normsim::harness;

// Accepts either a filesystem path or the name of a bundled scenario.
harness::ScenarioConfig resolve_scenario(const std::string& ref) {
  if (std::filesystem::exists(ref)) return harness::load_scenario(ref);
  const auto names = harness::bundled_scenario_names();
  for (const auto& name : names) {
    if (name == ref) return harness::bundled_scenario(name);
  }
  throw harness::ScenarioError("scenario: no such file or bundled scenario: " + ref);
}

int cmd_run(const std::string& scenario_ref, int sims, int epochs, std::int64_t seed,
            const std::string& backend, int workers, const std::string& out_dir) {
  harness::ScenarioConfig cfg;
  try {
    cfg = resolve_scenario(scenario_ref);
    if (sims > 0) cfg.n_simulations = sims;
    if (epochs > 0) cfg.n_epochs = epochs;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (backend == "stub") cfg.backend = harness::BackendKind::Stub;
    else if (backend == "remote") cfg.backend = harness::BackendKind::Remote;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    const harness::BatchResult batch = harness::run_batch(cfg, workers);
    harness::export_results(batch, out_dir);
    std::cout << "scenario " << cfg.name << ": " << batch.summary.completed << "/"
              << batch.summary.requested << " simulations completed; results in " << out_dir
              << "\n";
    for (const auto& failure : batch.failures) std::cerr << "failure: " << failure << "\n";
    return batch.failures.empty() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_list() {
  for (const auto& name : harness::bundled_scenario_names()) {
    try {
      const auto cfg = harness::bundled_scenario(name);
      std::cout << name << " — " << cfg.description << "\n";
    } catch (const std::exception& e) {
      std::cout << name << " — (invalid: " << e.what() << ")\n";
    }
  }
  return 0;
}

int cmd_validate(const std::string& scenario_ref) {
  try {
    const auto cfg = resolve_scenario(scenario_ref);
    std::cout << "scenario " << cfg.name << ": valid\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_summarize(const std::string& in_dir) {
  try {
    const harness::BatchSummary summary = harness::summarize_from_dir(in_dir);
    std::cout << harness::summary_to_json(summary) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normsim — seeded ultimatum-game norm-learning simulator"};
  app.require_subcommand(1);

  std::string scenario_ref;
  std::string out_dir;
  std::string in_dir;
  std::string backend;
  int sims = 0;
  int epochs = 0;
  std::int64_t seed = -1;
  int workers = 1;

  auto* run = app.add_subcommand("run", "Execute a scenario batch and write results");
  run->add_option("--scenario", scenario_ref, "Scenario file path or bundled name")->required();
  run->add_option("--sims", sims, "Override the number of simulations");
  run->add_option("--epochs", epochs, "Override the number of epochs");
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--backend", backend, "Backend override: stub or remote")
      ->check(CLI::IsMember({"stub", "remote"}));
  run->add_option("--workers", workers, "Concurrent simulation workers");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* list = app.add_subcommand("list-scenarios", "Print bundled scenario names");

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("--scenario", scenario_ref, "Scenario file path or bundled name")
      ->required();

  auto* summarize = app.add_subcommand("summarize", "Recompute the batch summary from results.csv");
  summarize->add_option("--in", in_dir, "Directory containing results.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (run->parsed()) return cmd_run(scenario_ref, sims, epochs, seed, backend, workers, out_dir);
  if (list->parsed()) return cmd_list();
  if (validate->parsed()) return cmd_validate(scenario_ref);
  if (summarize->parsed()) return cmd_summarize(in_dir);
  return 1;
}

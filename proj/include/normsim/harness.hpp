#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "normsim/episode.hpp"
#include "normsim/inference.hpp"
#include "normsim/lm_bridge.hpp"

// Scenario configuration, interaction scheduling, seeded batch execution,
// statistics (means and 95% confidence intervals across simulations),
// persistence, and convergence labeling.
namespace normsim::harness {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroupSpec {
  agents::NormPolicy policy;
  agents::Manner manner = agents::Manner::Neutral;
  int count = 0;
};

struct Schedule {
  int user_user = 8;
  int assistant_user = 2;  // split: ceil/2 assistant-as-proposer, floor/2 as responder
  int assistant_assistant = 0;

  int assistant_proposer() const { return (assistant_user + 1) / 2; }
  int assistant_responder() const { return assistant_user / 2; }
  int episodes_per_epoch() const { return user_user + assistant_user + assistant_assistant; }
};

struct TestPhase {
  std::vector<std::string> currencies;
  int amount_min = 0;  // 0 = inherit the training range
  int amount_max = 0;
  int n_test_episodes = 0;
  bool require_ood = false;  // validation: test currencies must not overlap training
};

enum class ContextVariation { PerSimulation, PerEpisode };
enum class BackendKind { Stub, Remote };

struct ScenarioConfig {
  std::string name;
  std::string description;
  int n_simulations = 20;
  int n_epochs = 5;
  std::uint64_t seed = 7;
  BackendKind backend = BackendKind::Stub;
  Schedule schedule;
  std::vector<GroupSpec> group;
  std::vector<std::string> currencies;
  int amount_min = 10;
  int amount_max = 100;
  ContextVariation context_variation = ContextVariation::PerSimulation;
  agents::NormPolicy prior_policy = agents::NormPolicy::altruistic();
  inference::GeneralizationKernel kernel = inference::GeneralizationKernel::ExactCurrencyMatch;
  inference::HypothesisSpace hypotheses = inference::HypothesisSpace::standard();
  inference::LikelihoodParams likelihood;
  std::optional<TestPhase> test_phase;
  bool minimal_token = false;

  game::ContextDistribution context_distribution() const {
    return {currencies, amount_min, amount_max};
  }
  void validate() const;
};

ScenarioConfig scenario_from_json(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Bundled scenarios shipped with the simulator (scenarios/ directory).
std::vector<std::string> bundled_scenario_names();
ScenarioConfig bundled_scenario(const std::string& name);
std::filesystem::path bundled_scenario_dir();

enum class Phase { Train, Test };

/// One row per episode. The focal agent is the assistant when it takes part,
/// otherwise the proposing user; offered_share_pct is always the episode's
/// offer regardless of who the focal agent is.
struct EpisodeRow {
  int sim_id = 0;
  int epoch = 0;  // 1-based; test rows carry the final epoch index
  Phase phase = Phase::Train;
  bool assistant = false;  // focal agent kind
  bool focal_is_proposer = true;
  std::string currency;
  int total_amount = 0;
  double offered_share_pct = 0.0;
  game::Decision decision = game::Decision::Accept;
  std::string directive_hash;
};

struct EpochInfo {
  int epoch = 0;
  std::string directive_text;
  std::optional<agents::NormPolicy> sampled;
};

struct Diagnostics {
  int parse_failures = 0;
};

struct SimulationResult {
  int sim_index = 0;
  std::vector<EpisodeRow> rows;
  std::vector<EpochInfo> epochs;  // directive emitted at each epoch boundary
  inference::PosteriorBelief final_belief;
  Diagnostics diagnostics;
  std::optional<agents::NormPolicy> converged_policy;  // final directive's policy
  double user_mean_offer_pct = 0.0;          // over all user proposals, train phase
  std::vector<double> assistant_epoch_pct;   // per-epoch mean of assistant proposals
};

struct SeriesPoint {
  int epoch = 0;
  double mean = 0.0;
  std::optional<double> ci_low;  // absent when n < 2
  std::optional<double> ci_high;
  int n = 0;
};

struct ConvergenceLabel {
  int sim_index = 0;
  bool converged = false;
  std::optional<int> epoch;  // first epoch from which alignment holds
  std::string policy;        // converged policy name ("" when unstructured)
};

struct BatchSummary {
  std::vector<SeriesPoint> user_series;
  std::vector<SeriesPoint> assistant_series;
  std::vector<ConvergenceLabel> labels;
  std::map<std::string, double> converged_distribution;  // fraction of completed runs
  int completed = 0;
  int requested = 0;
};

struct BatchResult {
  BatchSummary summary;
  std::vector<SimulationResult> simulations;
  std::vector<std::string> failures;  // per-sim error messages (remote only)
};

SimulationResult run_simulation(const ScenarioConfig& cfg, int sim_index,
                                const bridge::LmBackend& backend);

BatchResult run_batch(const ScenarioConfig& cfg, const bridge::LmBackend& backend,
                      int workers = 1);

/// Convenience overload constructing the backend from the scenario (stub, or
/// remote from environment variables).
BatchResult run_batch(const ScenarioConfig& cfg, int workers = 1);

/// Convergence epoch: the first epoch after which the assistant's offered
/// share stays within `tolerance_pct` of the run's user mean for all
/// remaining epochs. `converged` additionally requires the epoch to fall
/// within threshold_epochs.
ConvergenceLabel label_convergence(const SimulationResult& result, int threshold_epochs,
                                   double tolerance_pct = 5.0);

BatchSummary summarize(const ScenarioConfig& cfg, const std::vector<SimulationResult>& sims);

std::string directive_hash(const std::string& text);

/// Writes results.csv, results.json, and plot_data.csv into `out_dir`.
/// CSV columns: sim_id,epoch,phase,agent_kind,role,currency,total_amount,
/// offered_share_pct,decision,directive_hash.
void export_results(const BatchResult& batch, const std::filesystem::path& out_dir);

std::string rows_to_csv(const std::vector<SimulationResult>& sims);
std::vector<EpisodeRow> csv_to_rows(const std::string& csv_text);

/// Recomputes per-epoch statistics from a persisted results.csv; merges
/// converged-policy labels from results.json when present.
BatchSummary summarize_from_dir(const std::filesystem::path& dir);

std::string summary_to_json(const BatchSummary& summary);
BatchSummary summary_from_json(const std::string& json_text);

}  // namespace normsim::harness

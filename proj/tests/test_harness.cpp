#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "normsim/harness.hpp"

using namespace normsim;

namespace {

const char* kMinimalScenario = R"({
  "name": "tiny",
  "n_simulations": 2,
  "n_epochs": 3,
  "seed": 7,
  "group": [{"policy": "altruistic", "count": 3}],
  "currencies": ["dollars"],
  "amounts": [10, 10]
})";

harness::ScenarioConfig tiny() { return harness::scenario_from_json(kMinimalScenario); }

}  // namespace

TEST_CASE("scenario parsing fills documented defaults") {
  const auto cfg = tiny();
  CHECK(cfg.schedule.user_user == 8);
  CHECK(cfg.schedule.assistant_user == 2);
  CHECK(cfg.schedule.assistant_assistant == 0);
  CHECK(cfg.backend == harness::BackendKind::Stub);
  CHECK(cfg.context_variation == harness::ContextVariation::PerSimulation);
  CHECK(cfg.kernel == inference::GeneralizationKernel::ExactCurrencyMatch);
  CHECK(cfg.hypotheses.size() == 3);
  CHECK(cfg.likelihood.concentration == doctest::Approx(8.0));
  CHECK(cfg.likelihood.smoothing == doctest::Approx(0.01));
  CHECK(cfg.likelihood.tone_weight == doctest::Approx(0.7));
  CHECK_FALSE(cfg.test_phase.has_value());
}

TEST_CASE("scenario validation rejects semantic violations") {
  CHECK_THROWS_AS(harness::scenario_from_json("{not json"), harness::ScenarioError);
  CHECK_THROWS_AS(harness::scenario_from_json("{\"name\": \"x\"}"), harness::ScenarioError);

  auto no_users = tiny();
  no_users.group.clear();
  CHECK_THROWS_AS(no_users.validate(), harness::ScenarioError);

  auto one_user = tiny();
  one_user.group[0].count = 1;  // user-user episodes need a partner
  CHECK_THROWS_AS(one_user.validate(), harness::ScenarioError);

  auto idle = tiny();
  idle.schedule = {0, 0, 0};
  CHECK_THROWS_AS(idle.validate(), harness::ScenarioError);

  auto foreign_prior = tiny();
  foreign_prior.hypotheses.hypotheses = {agents::NormPolicy::selfish()};
  foreign_prior.prior_policy = agents::NormPolicy::altruistic();
  CHECK_THROWS_AS(foreign_prior.validate(), harness::ScenarioError);

  auto overlap = tiny();
  overlap.test_phase = harness::TestPhase{{"dollars"}, 0, 0, 5, /*require_ood=*/true};
  CHECK_THROWS_AS(overlap.validate(), harness::ScenarioError);

  CHECK_THROWS_AS(harness::load_scenario("/nonexistent/path.json"), harness::ScenarioError);
}

TEST_CASE("bundled scenarios load, validate, and include the documented baseline") {
  const auto names = harness::bundled_scenario_names();
  CHECK(names.size() == 12);
  for (const auto& name : names) {
    const auto cfg = harness::bundled_scenario(name);
    CHECK(cfg.name == name);
    CHECK_FALSE(cfg.description.empty());
  }

  const auto baseline = harness::bundled_scenario("alignment_altruistic");
  CHECK(baseline.n_simulations == 20);
  CHECK(baseline.n_epochs == 5);
  CHECK(baseline.schedule.user_user == 8);
  CHECK(baseline.schedule.assistant_user == 2);
  REQUIRE(baseline.group.size() == 1);
  CHECK(baseline.group[0].count == 10);
  CHECK(baseline.group[0].policy.kind == agents::PolicyKind::Altruistic);
}

TEST_CASE("a simulation produces schedule-consistent rows and evidence counts") {
  const auto cfg = tiny();
  const bridge::StubBackend backend(cfg.hypotheses, cfg.likelihood);
  const auto result = harness::run_simulation(cfg, 0, backend);

  CHECK(result.rows.size() ==
        static_cast<std::size_t>(cfg.n_epochs * cfg.schedule.episodes_per_epoch()));
  CHECK(result.epochs.size() == static_cast<std::size_t>(cfg.n_epochs));
  CHECK(result.diagnostics.parse_failures == 0);

  // Evidence per epoch = user-user episodes + assistant-as-responder episodes.
  const auto per_epoch = cfg.schedule.user_user + cfg.schedule.assistant_responder();
  CHECK(result.final_belief.history_size ==
        static_cast<std::size_t>(cfg.n_epochs * per_epoch));

  // Row accounting per epoch and kind.
  for (int epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
    int user_rows = 0, assistant_rows = 0;
    for (const auto& row : result.rows) {
      if (row.epoch != epoch) continue;
      (row.assistant ? assistant_rows : user_rows)++;
    }
    CHECK(user_rows == cfg.schedule.user_user);
    CHECK(assistant_rows == cfg.schedule.assistant_user + cfg.schedule.assistant_assistant);
  }
}

TEST_CASE("simulations are deterministic and independent of batch context") {
  const auto cfg = tiny();
  const bridge::StubBackend backend(cfg.hypotheses, cfg.likelihood);
  const auto alone = harness::run_simulation(cfg, 1, backend);
  const auto batch = harness::run_batch(cfg, backend, /*workers=*/2);
  REQUIRE(batch.simulations.size() == 2);
  CHECK(harness::rows_to_csv({alone}) == harness::rows_to_csv({batch.simulations[1]}));
}

TEST_CASE("convergence labeling scans for the stable suffix") {
  harness::SimulationResult result;
  result.user_mean_offer_pct = 100.0;
  result.assistant_epoch_pct = {50, 100, 100, 100, 100};
  const auto label = harness::label_convergence(result, 5);
  CHECK(label.converged);
  REQUIRE(label.epoch.has_value());
  CHECK(*label.epoch == 2);

  harness::SimulationResult never;
  never.user_mean_offer_pct = 100.0;
  never.assistant_epoch_pct = {50, 50, 50, 50, 50};
  const auto missing = harness::label_convergence(never, 5);
  CHECK_FALSE(missing.converged);
  CHECK_FALSE(missing.epoch.has_value());

  harness::SimulationResult relapse;
  relapse.user_mean_offer_pct = 100.0;
  relapse.assistant_epoch_pct = {100, 50, 100, 100, 100};
  CHECK(*harness::label_convergence(relapse, 5).epoch == 3);
}

TEST_CASE("an altruistic batch reports a constant user series at 100 percent") {
  const auto cfg = tiny();
  const auto batch = harness::run_batch(cfg, 1);
  REQUIRE(batch.summary.user_series.size() == 3);
  for (const auto& point : batch.summary.user_series) {
    CHECK(point.mean == doctest::Approx(100.0));
    CHECK(point.n == cfg.n_simulations);
  }
  CHECK(batch.summary.converged_distribution.count("altruistic") == 1);
}

TEST_CASE("confidence intervals are absent for a single simulation") {
  auto cfg = tiny();
  cfg.n_simulations = 1;
  const auto batch = harness::run_batch(cfg, 1);
  for (const auto& point : batch.summary.user_series) {
    CHECK(point.n == 1);
    CHECK_FALSE(point.ci_low.has_value());
    CHECK_FALSE(point.ci_high.has_value());
  }
}

TEST_CASE("csv rows survive a round trip") {
  const auto cfg = tiny();
  const auto batch = harness::run_batch(cfg, 1);
  const auto csv = harness::rows_to_csv(batch.simulations);
  const auto rows = harness::csv_to_rows(csv);
  std::size_t expected = 0;
  for (const auto& sim : batch.simulations) expected += sim.rows.size();
  REQUIRE(rows.size() == expected);
  const auto& first = batch.simulations[0].rows[0];
  CHECK(rows[0].sim_id == first.sim_id);
  CHECK(rows[0].currency == first.currency);
  CHECK(rows[0].offered_share_pct == doctest::Approx(first.offered_share_pct).epsilon(1e-12));
  CHECK(rows[0].directive_hash == first.directive_hash);
}

TEST_CASE("summary json export/import reproduces the summary exactly") {
  const auto batch = harness::run_batch(tiny(), 1);
  const auto text = harness::summary_to_json(batch.summary);
  const auto loaded = harness::summary_from_json(text);
  CHECK(loaded.completed == batch.summary.completed);
  CHECK(loaded.converged_distribution == batch.summary.converged_distribution);
  REQUIRE(loaded.user_series.size() == batch.summary.user_series.size());
  for (std::size_t i = 0; i < loaded.user_series.size(); ++i) {
    CHECK(loaded.user_series[i].mean == batch.summary.user_series[i].mean);
    CHECK(loaded.user_series[i].ci_low == batch.summary.user_series[i].ci_low);
  }
  REQUIRE(loaded.labels.size() == batch.summary.labels.size());
  for (std::size_t i = 0; i < loaded.labels.size(); ++i) {
    CHECK(loaded.labels[i].converged == batch.summary.labels[i].converged);
    CHECK(loaded.labels[i].epoch == batch.summary.labels[i].epoch);
  }
}

TEST_CASE("summaries recomputed from exported files match the live summary") {
  const auto cfg = harness::bundled_scenario("mixed_80_20");
  const auto batch = harness::run_batch(cfg, 4);
  const auto dir = std::filesystem::temp_directory_path() / "normsim_test_export";
  std::filesystem::remove_all(dir);
  harness::export_results(batch, dir);

  const auto recomputed = harness::summarize_from_dir(dir);
  REQUIRE(recomputed.assistant_series.size() == batch.summary.assistant_series.size());
  for (std::size_t i = 0; i < recomputed.assistant_series.size(); ++i) {
    CHECK(std::abs(recomputed.assistant_series[i].mean -
                   batch.summary.assistant_series[i].mean) < 1e-9);
    if (batch.summary.assistant_series[i].ci_low) {
      CHECK(std::abs(*recomputed.assistant_series[i].ci_low -
                     *batch.summary.assistant_series[i].ci_low) < 1e-9);
    }
  }
  CHECK(recomputed.converged_distribution == batch.summary.converged_distribution);
  REQUIRE(recomputed.labels.size() == batch.summary.labels.size());
  for (std::size_t i = 0; i < recomputed.labels.size(); ++i) {
    CHECK(recomputed.labels[i].epoch == batch.summary.labels[i].epoch);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("directive hashing is stable and content-sensitive") {
  const auto a = harness::directive_hash("Always split resources equally.");
  CHECK(a == harness::directive_hash("Always split resources equally."));
  CHECK(a != harness::directive_hash("Always split resources equally!"));
  CHECK(a.size() == 16);
}

TEST_CASE("test-phase episodes cycle the test currencies round-robin") {
  const auto cfg = harness::bundled_scenario("generalization_selfish");
  const bridge::StubBackend backend(cfg.hypotheses, cfg.likelihood);
  const auto result = harness::run_simulation(cfg, 0, backend);
  std::vector<harness::EpisodeRow> test_rows;
  for (const auto& row : result.rows) {
    if (row.phase == harness::Phase::Test) test_rows.push_back(row);
  }
  REQUIRE(test_rows.size() == static_cast<std::size_t>(cfg.test_phase->n_test_episodes));
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    CHECK(test_rows[i].currency == cfg.test_phase->currencies[i % 2]);
    CHECK(test_rows[i].assistant);
    CHECK(test_rows[i].epoch == cfg.n_epochs);
  }
}

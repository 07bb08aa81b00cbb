#include "normsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace normsim::harness {

namespace {

using nlohmann::json;

std::string policy_name(const agents::NormPolicy& policy) {
  if (policy.kind == agents::PolicyKind::Parametric) {
    const int pct = static_cast<int>(std::lround(policy.target * 100.0));
    return "parametric:" + std::to_string(pct);
  }
  return agents::to_string(policy.kind);
}

agents::NormPolicy policy_from_json(const json& j) {
  if (j.is_number()) return agents::NormPolicy::parametric(j.get<double>());
  if (j.is_string()) {
    const auto kind = agents::policy_kind_from_string(j.get<std::string>());
    switch (kind) {
      case agents::PolicyKind::Selfish: return agents::NormPolicy::selfish();
      case agents::PolicyKind::Altruistic: return agents::NormPolicy::altruistic();
      case agents::PolicyKind::Fair: return agents::NormPolicy::fair();
      case agents::PolicyKind::Parametric:
        throw ScenarioError("policy: parametric requires a target fraction");
    }
  }
  if (j.is_object()) {
    const auto kind = agents::policy_kind_from_string(j.at("kind").get<std::string>());
    agents::NormPolicy policy;
    switch (kind) {
      case agents::PolicyKind::Selfish: policy = agents::NormPolicy::selfish(); break;
      case agents::PolicyKind::Altruistic: policy = agents::NormPolicy::altruistic(); break;
      case agents::PolicyKind::Fair: policy = agents::NormPolicy::fair(); break;
      case agents::PolicyKind::Parametric:
        policy = agents::NormPolicy::parametric(j.at("target").get<double>());
        break;
    }
    if (j.contains("accept_threshold"))
      policy.accept_threshold = j.at("accept_threshold").get<double>();
    return policy;
  }
  throw ScenarioError("policy: expected string, number, or object");
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

SeriesPoint make_point(int epoch, const std::vector<double>& values) {
  SeriesPoint point;
  point.epoch = epoch;
  point.n = static_cast<int>(values.size());
  if (values.empty()) return point;
  point.mean = mean_of(values);
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - point.mean) * (v - point.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    const double half = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    point.ci_low = point.mean - half;
    point.ci_high = point.mean + half;
  }
  return point;
}

// Per-epoch series across sims from episode rows; shared between the live
// summary path and CSV reimport.
std::vector<SeriesPoint> series_from_rows(const std::vector<EpisodeRow>& rows, int n_epochs,
                                          bool assistant) {
  std::vector<SeriesPoint> series;
  for (int epoch = 1; epoch <= n_epochs; ++epoch) {
    // sim -> per-sim values
    std::map<int, std::vector<double>> by_sim;
    for (const auto& row : rows) {
      if (row.phase != Phase::Train || row.epoch != epoch) continue;
      if (row.assistant != assistant) continue;
      if (assistant && !row.focal_is_proposer) continue;
      by_sim[row.sim_id].push_back(row.offered_share_pct);
    }
    std::vector<double> per_sim_means;
    per_sim_means.reserve(by_sim.size());
    for (const auto& [sim, values] : by_sim) per_sim_means.push_back(mean_of(values));
    series.push_back(make_point(epoch, per_sim_means));
  }
  return series;
}

std::string csv_escape(const std::string& field) {
  // None of the emitted fields contain commas or quotes today; currencies
  // are plain word runs. Kept minimal on purpose.
  return field;
}

std::string format_pct(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.10f", value);
  return buffer;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (name.empty()) throw ScenarioError("scenario: name must be non-empty");
  if (n_simulations < 1) throw ScenarioError("scenario: n_simulations must be >= 1");
  if (n_epochs < 1) throw ScenarioError("scenario: n_epochs must be >= 1");
  if (schedule.user_user < 0 || schedule.assistant_user < 0 || schedule.assistant_assistant < 0)
    throw ScenarioError("scenario: schedule counts must be >= 0");
  if (schedule.episodes_per_epoch() == 0)
    throw ScenarioError("scenario: schedule must contain at least one episode");
  if (group.empty()) throw ScenarioError("scenario: group must be non-empty");
  int n_users = 0;
  for (const auto& spec : group) {
    if (spec.count < 1) throw ScenarioError("scenario: group counts must be >= 1");
    n_users += spec.count;
  }
  if (n_users < 2 && schedule.user_user > 0)
    throw ScenarioError("scenario: user-user episodes need at least two users");
  if (currencies.empty()) throw ScenarioError("scenario: currencies must be non-empty");
  if (amount_min < 1 || amount_max < amount_min)
    throw ScenarioError("scenario: amounts range is empty or invalid");
  hypotheses.validate();
  likelihood.validate();
  const bool prior_in_space =
      std::any_of(hypotheses.hypotheses.begin(), hypotheses.hypotheses.end(),
                  [this](const agents::NormPolicy& h) { return h.same_hypothesis(prior_policy); });
  if (!prior_in_space)
    throw ScenarioError("scenario: prior_policy must be a member of the hypothesis space");
  if (test_phase) {
    if (test_phase->currencies.empty())
      throw ScenarioError("scenario: test_phase.currencies must be non-empty");
    if (test_phase->n_test_episodes < 1)
      throw ScenarioError("scenario: test_phase.n_test_episodes must be >= 1");
    if (test_phase->amount_min != 0 &&
        (test_phase->amount_min < 1 || test_phase->amount_max < test_phase->amount_min))
      throw ScenarioError("scenario: test_phase amounts range is invalid");
    if (test_phase->require_ood) {
      for (const auto& c : test_phase->currencies) {
        if (std::find(currencies.begin(), currencies.end(), c) != currencies.end())
          throw ScenarioError("scenario: test currency \"" + c +
                              "\" overlaps the training pool in an OOD scenario");
      }
    }
  }
}

ScenarioConfig scenario_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: malformed JSON: ") + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.name = j.at("name").get<std::string>();
    cfg.description = j.value("description", "");
    cfg.n_simulations = j.value("n_simulations", 20);
    cfg.n_epochs = j.value("n_epochs", 5);
    cfg.seed = j.value("seed", std::uint64_t{7});
    if (j.contains("backend")) {
      const std::string b = j.at("backend").get<std::string>();
      if (b == "stub") cfg.backend = BackendKind::Stub;
      else if (b == "remote") cfg.backend = BackendKind::Remote;
      else throw ScenarioError("scenario: backend must be \"stub\" or \"remote\"");
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      cfg.schedule.user_user = s.value("user_user", 8);
      cfg.schedule.assistant_user = s.value("assistant_user", 2);
      cfg.schedule.assistant_assistant = s.value("assistant_assistant", 0);
    }
    for (const auto& g : j.at("group")) {
      GroupSpec spec;
      spec.policy = policy_from_json(g.at("policy"));
      spec.manner = agents::manner_from_string(g.value("manner", "neutral"));
      spec.count = g.at("count").get<int>();
      cfg.group.push_back(spec);
    }
    cfg.currencies = j.at("currencies").get<std::vector<std::string>>();
    if (j.contains("amounts")) {
      const auto& a = j.at("amounts");
      cfg.amount_min = a.at(0).get<int>();
      cfg.amount_max = a.at(1).get<int>();
    }
    if (j.contains("context_variation")) {
      const std::string v = j.at("context_variation").get<std::string>();
      if (v == "per_simulation") cfg.context_variation = ContextVariation::PerSimulation;
      else if (v == "per_episode") cfg.context_variation = ContextVariation::PerEpisode;
      else throw ScenarioError("scenario: context_variation must be per_simulation or per_episode");
    }
    if (j.contains("prior_policy")) cfg.prior_policy = policy_from_json(j.at("prior_policy"));
    if (j.contains("kernel"))
      cfg.kernel = inference::kernel_from_string(j.at("kernel").get<std::string>());
    if (j.contains("hypotheses")) {
      cfg.hypotheses.hypotheses.clear();
      for (const auto& h : j.at("hypotheses"))
        cfg.hypotheses.hypotheses.push_back(policy_from_json(h));
    }
    if (j.contains("likelihood")) {
      const auto& l = j.at("likelihood");
      cfg.likelihood.concentration = l.value("concentration", cfg.likelihood.concentration);
      cfg.likelihood.smoothing = l.value("smoothing", cfg.likelihood.smoothing);
      cfg.likelihood.tone_weight = l.value("tone_weight", cfg.likelihood.tone_weight);
      if (l.contains("manner_table")) {
        const auto& table = l.at("manner_table");
        const char* kinds[3] = {"selfish", "altruistic", "fair"};
        for (int k = 0; k < 3; ++k) {
          if (!table.contains(kinds[k])) continue;
          const auto& row = table.at(kinds[k]);
          const double rude = row.value("rude", 0.0);
          const double syc = row.value("sycophantic", 0.0);
          const double neutral = row.value("neutral", 1.0 - rude - syc);
          cfg.likelihood.manner_table.p[k] = {neutral, rude, syc};
        }
      }
    }
    if (j.contains("test_phase")) {
      const auto& t = j.at("test_phase");
      TestPhase phase;
      phase.currencies = t.at("currencies").get<std::vector<std::string>>();
      if (t.contains("amounts")) {
        phase.amount_min = t.at("amounts").at(0).get<int>();
        phase.amount_max = t.at("amounts").at(1).get<int>();
      }
      phase.n_test_episodes = t.value("n_test_episodes", 10);
      phase.require_ood = t.value("require_ood", false);
      cfg.test_phase = phase;
    }
    cfg.minimal_token = j.value("minimal_token", false);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: schema violation: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

std::filesystem::path bundled_scenario_dir() {
#ifdef NORMSIM_SCENARIO_DIR
  return NORMSIM_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  const auto dir = bundled_scenario_dir();
  if (!std::filesystem::exists(dir)) return names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

ScenarioConfig bundled_scenario(const std::string& name) {
  return load_scenario(bundled_scenario_dir() / (name + ".json"));
}

std::string directive_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

// ---------------------------------------------------------------------------
// Simulation loop

namespace {

struct EpisodePlan {
  enum class Kind { UserUser, AssistantProposer, AssistantResponder, AssistantAssistant };
  Kind kind;
};

game::Context instantiate_context(const ScenarioConfig& cfg, const std::optional<game::Context>& fixed,
                                  Rng& ctx_rng, std::int64_t episode_id, int epoch) {
  game::Context ctx;
  if (fixed) {
    ctx = *fixed;
  } else {
    ctx = game::sample_context(cfg.context_distribution(), ctx_rng);
  }
  ctx.episode_id = episode_id;
  ctx.epoch_index = epoch;
  return ctx;
}

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& cfg, int sim_index,
                                const bridge::LmBackend& backend) {
  cfg.validate();
  const auto sim = static_cast<std::uint64_t>(sim_index);
  Rng ctx_rng = Rng::stream(cfg.seed, sim, 0);
  Rng pair_rng = Rng::stream(cfg.seed, sim, 1);
  Rng sample_rng = Rng::stream(cfg.seed, sim, 2);
  Rng episode_rng = Rng::stream(cfg.seed, sim, 3);

  std::vector<agents::UserAgent> users;
  for (const auto& spec : cfg.group) {
    for (int i = 0; i < spec.count; ++i) {
      agents::UserAgent user;
      user.agent_id = "user-" + std::to_string(users.size());
      user.policy = spec.policy;
      user.manner = spec.manner;
      user.minimal_token = cfg.minimal_token;
      users.push_back(std::move(user));
    }
  }

  SimulationResult result;
  result.sim_index = sim_index;

  inference::PosteriorBelief belief = inference::PosteriorBelief::uniform(cfg.hypotheses);
  const agents::NormPolicy initial = inference::sample_hypothesis(cfg.hypotheses, belief, sample_rng);
  inference::DirectiveStore store{inference::make_directive(initial, {}), cfg.prior_policy,
                                  cfg.kernel};

  std::optional<game::Context> fixed_context;
  if (cfg.context_variation == ContextVariation::PerSimulation) {
    fixed_context = game::sample_context(cfg.context_distribution(), ctx_rng);
  }

  std::set<std::string> evidence_currencies;
  std::vector<double> user_offers;
  std::int64_t episode_id = 0;

  auto pick_user = [&users](Rng& rng) { return rng.index(users.size()); };
  auto pick_other = [&users](Rng& rng, std::size_t exclude) {
    std::size_t r = rng.index(users.size() - 1);
    if (r >= exclude) ++r;
    return r;
  };

  for (int epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
    std::vector<inference::Observation> epoch_obs;
    std::vector<bridge::EpisodeTranscript> transcripts;
    std::vector<double> assistant_offers;
    const std::string active_hash = directive_hash(store.current.text);

    std::vector<EpisodePlan> plan;
    for (int i = 0; i < cfg.schedule.user_user; ++i)
      plan.push_back({EpisodePlan::Kind::UserUser});
    for (int i = 0; i < cfg.schedule.assistant_proposer(); ++i)
      plan.push_back({EpisodePlan::Kind::AssistantProposer});
    for (int i = 0; i < cfg.schedule.assistant_responder(); ++i)
      plan.push_back({EpisodePlan::Kind::AssistantResponder});
    for (int i = 0; i < cfg.schedule.assistant_assistant; ++i)
      plan.push_back({EpisodePlan::Kind::AssistantAssistant});

    for (const auto& step : plan) {
      game::Context ctx = instantiate_context(cfg, fixed_context, ctx_rng, episode_id++, epoch);
      const bridge::AssistantPlayer assistant(backend, store.current);

      const game::Agent* proposer = nullptr;
      const game::Agent* responder = nullptr;
      std::optional<game::UserPlayer> user_a;
      std::optional<game::UserPlayer> user_b;
      bool proposer_is_assistant = false;
      bool responder_is_assistant = false;

      switch (step.kind) {
        case EpisodePlan::Kind::UserUser: {
          const std::size_t p = pick_user(pair_rng);
          const std::size_t r = pick_other(pair_rng, p);
          ctx.proposer_agent = users[p].agent_id;
          ctx.responder_agent = users[r].agent_id;
          user_a.emplace(users[p]);
          user_b.emplace(users[r]);
          proposer = &*user_a;
          responder = &*user_b;
          break;
        }
        case EpisodePlan::Kind::AssistantProposer: {
          const std::size_t r = pick_user(pair_rng);
          ctx.proposer_agent = "assistant";
          ctx.responder_agent = users[r].agent_id;
          user_b.emplace(users[r]);
          proposer = &assistant;
          responder = &*user_b;
          proposer_is_assistant = true;
          break;
        }
        case EpisodePlan::Kind::AssistantResponder: {
          const std::size_t p = pick_user(pair_rng);
          ctx.proposer_agent = users[p].agent_id;
          ctx.responder_agent = "assistant";
          user_a.emplace(users[p]);
          proposer = &*user_a;
          responder = &assistant;
          responder_is_assistant = true;
          break;
        }
        case EpisodePlan::Kind::AssistantAssistant: {
          ctx.proposer_agent = "assistant";
          ctx.responder_agent = "assistant";
          proposer = &assistant;
          responder = &assistant;
          proposer_is_assistant = true;
          responder_is_assistant = true;
          break;
        }
      }

      game::Trajectory trajectory;
      try {
        trajectory = game::run_episode(*proposer, *responder, ctx, episode_rng);
      } catch (const game::EpisodeParseError&) {
        ++result.diagnostics.parse_failures;
        continue;  // excluded from history and from the result rows
      }

      transcripts.push_back(
          bridge::transcript_of(trajectory, proposer_is_assistant, responder_is_assistant));

      EpisodeRow row;
      row.sim_id = sim_index;
      row.epoch = epoch;
      row.phase = Phase::Train;
      row.assistant = proposer_is_assistant || responder_is_assistant;
      row.focal_is_proposer = !responder_is_assistant || proposer_is_assistant;
      row.currency = ctx.currency;
      row.total_amount = ctx.total_amount;
      row.offered_share_pct = game::offered_share_pct(trajectory.offer);
      row.decision = trajectory.decision;
      row.directive_hash = active_hash;
      result.rows.push_back(row);

      if (proposer_is_assistant) {
        assistant_offers.push_back(row.offered_share_pct);
      } else {
        // A user proposed. Assistant-assistant episodes never reach here;
        // the assistant's own proposals are not evidence of the group norm.
        user_offers.push_back(row.offered_share_pct);
        if (!responder_is_assistant || step.kind == EpisodePlan::Kind::AssistantResponder) {
          inference::Observation obs;
          obs.offered_fraction = trajectory.offer.responder_fraction();
          const auto& act = std::get<grammar::ProposalAct>(trajectory.steps.at(0).action);
          obs.manner = grammar::classify_manner(act.manner_clause);
          obs.context = ctx;
          obs.source = responder_is_assistant ? inference::ObservationSource::AssistantUser
                                              : inference::ObservationSource::UserUser;
          epoch_obs.push_back(std::move(obs));
          evidence_currencies.insert(ctx.currency);
        }
      }
    }

    result.assistant_epoch_pct.push_back(assistant_offers.empty() ? 0.0
                                                                  : mean_of(assistant_offers));

    const bridge::MetaPrompt prompt = bridge::build_meta_prompt(transcripts, store.current.text);
    bridge::EpochUpdate update =
        backend.generate_directive(prompt, epoch_obs, belief, evidence_currencies, sample_rng);
    belief = update.belief;
    store.current = update.directive;
    result.epochs.push_back({epoch, store.current.text, update.sampled});
  }

  if (cfg.test_phase) {
    const TestPhase& test = *cfg.test_phase;
    const int lo = test.amount_min > 0 ? test.amount_min : cfg.amount_min;
    const int hi = test.amount_min > 0 ? test.amount_max : cfg.amount_max;
    for (int i = 0; i < test.n_test_episodes; ++i) {
      game::Context ctx;
      ctx.episode_id = episode_id++;
      ctx.epoch_index = cfg.n_epochs;
      ctx.currency = test.currencies[static_cast<std::size_t>(i) % test.currencies.size()];
      ctx.total_amount = static_cast<int>(ctx_rng.uniform_int(lo, hi));
      ctx.proposer_agent = "assistant";

      const agents::NormPolicy& resolved = inference::resolve_policy(store, ctx);
      const inference::Directive test_directive =
          inference::make_directive(resolved, store.current.trained_currencies);
      const bridge::AssistantPlayer assistant(backend, test_directive);

      const std::size_t r = pick_user(pair_rng);
      ctx.responder_agent = users[r].agent_id;
      const game::UserPlayer responder(users[r]);

      game::Trajectory trajectory;
      try {
        trajectory = game::run_episode(assistant, responder, ctx, episode_rng);
      } catch (const game::EpisodeParseError&) {
        ++result.diagnostics.parse_failures;
        continue;
      }

      EpisodeRow row;
      row.sim_id = sim_index;
      row.epoch = cfg.n_epochs;
      row.phase = Phase::Test;
      row.assistant = true;
      row.focal_is_proposer = true;
      row.currency = ctx.currency;
      row.total_amount = ctx.total_amount;
      row.offered_share_pct = game::offered_share_pct(trajectory.offer);
      row.decision = trajectory.decision;
      row.directive_hash = directive_hash(test_directive.text);
      result.rows.push_back(row);
    }
  }

  result.final_belief = belief;
  result.converged_policy = store.current.structured;
  result.user_mean_offer_pct = user_offers.empty() ? 0.0 : mean_of(user_offers);
  return result;
}

ConvergenceLabel label_convergence(const SimulationResult& result, int threshold_epochs,
                                   double tolerance_pct) {
  ConvergenceLabel label;
  label.sim_index = result.sim_index;
  if (result.converged_policy) label.policy = policy_name(*result.converged_policy);
  const auto& series = result.assistant_epoch_pct;
  if (series.empty()) return label;

  std::optional<int> epoch;
  for (int e = static_cast<int>(series.size()); e >= 1; --e) {
    if (std::abs(series[static_cast<std::size_t>(e - 1)] - result.user_mean_offer_pct) <=
        tolerance_pct) {
      epoch = e;
    } else {
      break;
    }
  }
  label.epoch = epoch;
  label.converged = epoch.has_value() && *epoch <= threshold_epochs;
  return label;
}

BatchSummary summarize(const ScenarioConfig& cfg, const std::vector<SimulationResult>& sims) {
  BatchSummary summary;
  summary.requested = cfg.n_simulations;
  summary.completed = static_cast<int>(sims.size());

  std::vector<EpisodeRow> rows;
  for (const auto& sim : sims) rows.insert(rows.end(), sim.rows.begin(), sim.rows.end());
  summary.user_series = series_from_rows(rows, cfg.n_epochs, /*assistant=*/false);
  summary.assistant_series = series_from_rows(rows, cfg.n_epochs, /*assistant=*/true);

  std::map<std::string, int> counts;
  for (const auto& sim : sims) {
    ConvergenceLabel label = label_convergence(sim, cfg.n_epochs);
    summary.labels.push_back(label);
    if (sim.converged_policy) ++counts[policy_name(*sim.converged_policy)];
  }
  for (const auto& [name, count] : counts) {
    summary.converged_distribution[name] =
        static_cast<double>(count) / static_cast<double>(sims.size());
  }
  return summary;
}

BatchResult run_batch(const ScenarioConfig& cfg, const bridge::LmBackend& backend, int workers) {
  cfg.validate();
  const int n = cfg.n_simulations;
  std::vector<std::optional<SimulationResult>> slots(static_cast<std::size_t>(n));
  std::vector<std::string> failures(static_cast<std::size_t>(n));
  std::atomic<int> cursor{0};

  auto worker = [&] {
    for (;;) {
      const int i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        slots[static_cast<std::size_t>(i)] = run_simulation(cfg, i, backend);
      } catch (const std::exception& e) {
        failures[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BatchResult batch;
  for (int i = 0; i < n; ++i) {
    if (slots[static_cast<std::size_t>(i)]) {
      batch.simulations.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
    } else {
      batch.failures.push_back("sim " + std::to_string(i) + ": " +
                               failures[static_cast<std::size_t>(i)]);
    }
  }
  batch.summary = summarize(cfg, batch.simulations);
  return batch;
}

BatchResult run_batch(const ScenarioConfig& cfg, int workers) {
  if (cfg.backend == BackendKind::Remote) {
    const bridge::RemoteBackend backend(bridge::RemoteConfig::from_env());
    return run_batch(cfg, backend, workers);
  }
  const bridge::StubBackend backend(cfg.hypotheses, cfg.likelihood);
  return run_batch(cfg, backend, workers);
}

// ---------------------------------------------------------------------------
// Persistence

std::string rows_to_csv(const std::vector<SimulationResult>& sims) {
  std::string out =
      "sim_id,epoch,phase,agent_kind,role,currency,total_amount,offered_share_pct,decision,"
      "directive_hash\n";
  for (const auto& sim : sims) {
    for (const auto& row : sim.rows) {
      out += std::to_string(row.sim_id);
      out += ",";
      out += std::to_string(row.epoch);
      out += ",";
      out += row.phase == Phase::Train ? "train" : "test";
      out += ",";
      out += row.assistant ? "assistant" : "user";
      out += ",";
      out += row.focal_is_proposer ? "proposer" : "responder";
      out += ",";
      out += csv_escape(row.currency);
      out += ",";
      out += std::to_string(row.total_amount);
      out += ",";
      out += format_pct(row.offered_share_pct);
      out += ",";
      out += row.decision == game::Decision::Accept ? "accept" : "reject";
      out += ",";
      out += row.directive_hash;
      out += "\n";
    }
  }
  return out;
}

std::vector<EpisodeRow> csv_to_rows(const std::string& csv_text) {
  std::vector<EpisodeRow> rows;
  std::istringstream in(csv_text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 10) throw std::runtime_error("results.csv: malformed row: " + line);
    EpisodeRow row;
    row.sim_id = std::stoi(fields[0]);
    row.epoch = std::stoi(fields[1]);
    row.phase = fields[2] == "train" ? Phase::Train : Phase::Test;
    row.assistant = fields[3] == "assistant";
    row.focal_is_proposer = fields[4] == "proposer";
    row.currency = fields[5];
    row.total_amount = std::stoi(fields[6]);
    row.offered_share_pct = std::stod(fields[7]);
    row.decision = fields[8] == "accept" ? game::Decision::Accept : game::Decision::Reject;
    row.directive_hash = fields[9];
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

json point_to_json(const SeriesPoint& point) {
  json j = {{"epoch", point.epoch}, {"mean", point.mean}, {"n", point.n}};
  if (point.ci_low) j["ci_low"] = *point.ci_low;
  if (point.ci_high) j["ci_high"] = *point.ci_high;
  return j;
}

SeriesPoint point_from_json(const json& j) {
  SeriesPoint point;
  point.epoch = j.at("epoch").get<int>();
  point.mean = j.at("mean").get<double>();
  point.n = j.at("n").get<int>();
  if (j.contains("ci_low")) point.ci_low = j.at("ci_low").get<double>();
  if (j.contains("ci_high")) point.ci_high = j.at("ci_high").get<double>();
  return point;
}

json summary_to_json_impl(const BatchSummary& summary) {
  json j;
  j["requested"] = summary.requested;
  j["completed"] = summary.completed;
  j["user_series"] = json::array();
  for (const auto& p : summary.user_series) j["user_series"].push_back(point_to_json(p));
  j["assistant_series"] = json::array();
  for (const auto& p : summary.assistant_series) j["assistant_series"].push_back(point_to_json(p));
  j["labels"] = json::array();
  for (const auto& label : summary.labels) {
    json lj = {{"sim", label.sim_index}, {"converged", label.converged}, {"policy", label.policy}};
    if (label.epoch) lj["epoch"] = *label.epoch;
    j["labels"].push_back(lj);
  }
  j["converged_distribution"] = summary.converged_distribution;
  return j;
}

}  // namespace

std::string summary_to_json(const BatchSummary& summary) {
  return summary_to_json_impl(summary).dump(2);
}

BatchSummary summary_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  BatchSummary summary;
  summary.requested = j.at("requested").get<int>();
  summary.completed = j.at("completed").get<int>();
  for (const auto& p : j.at("user_series")) summary.user_series.push_back(point_from_json(p));
  for (const auto& p : j.at("assistant_series"))
    summary.assistant_series.push_back(point_from_json(p));
  for (const auto& lj : j.at("labels")) {
    ConvergenceLabel label;
    label.sim_index = lj.at("sim").get<int>();
    label.converged = lj.at("converged").get<bool>();
    label.policy = lj.at("policy").get<std::string>();
    if (lj.contains("epoch")) label.epoch = lj.at("epoch").get<int>();
    summary.labels.push_back(label);
  }
  summary.converged_distribution =
      j.at("converged_distribution").get<std::map<std::string, double>>();
  return summary;
}

void export_results(const BatchResult& batch, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream csv(out_dir / "results.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("export: cannot write " + (out_dir / "results.csv").string());
    csv << rows_to_csv(batch.simulations);
  }

  {
    json j;
    j["summary"] = summary_to_json_impl(batch.summary);
    j["failures"] = batch.failures;
    j["simulations"] = json::array();
    for (const auto& sim : batch.simulations) {
      json sj;
      sj["sim"] = sim.sim_index;
      sj["user_mean_offer_pct"] = sim.user_mean_offer_pct;
      sj["assistant_epoch_pct"] = sim.assistant_epoch_pct;
      sj["parse_failures"] = sim.diagnostics.parse_failures;
      sj["final_posterior"] = sim.final_belief.masses;
      if (sim.converged_policy) sj["converged_policy"] = policy_name(*sim.converged_policy);
      sj["epochs"] = json::array();
      for (const auto& info : sim.epochs) {
        json ej = {{"epoch", info.epoch}, {"directive", info.directive_text}};
        if (info.sampled) ej["sampled"] = policy_name(*info.sampled);
        sj["epochs"].push_back(ej);
      }
      j["simulations"].push_back(sj);
    }
    std::ofstream out(out_dir / "results.json", std::ios::binary);
    if (!out)
      throw std::runtime_error("export: cannot write " + (out_dir / "results.json").string());
    out << j.dump(2) << "\n";
  }

  {
    std::ofstream plot(out_dir / "plot_data.csv", std::ios::binary);
    if (!plot)
      throw std::runtime_error("export: cannot write " + (out_dir / "plot_data.csv").string());
    plot << "series,epoch,mean,ci_low,ci_high,n\n";
    auto emit = [&plot](const char* series, const SeriesPoint& point) {
      plot << series << "," << point.epoch << "," << format_pct(point.mean) << ",";
      if (point.ci_low) plot << format_pct(*point.ci_low);
      plot << ",";
      if (point.ci_high) plot << format_pct(*point.ci_high);
      plot << "," << point.n << "\n";
    };
    for (const auto& p : batch.summary.user_series) emit("user", p);
    for (const auto& p : batch.summary.assistant_series) emit("assistant", p);
  }
}

BatchSummary summarize_from_dir(const std::filesystem::path& dir) {
  std::ifstream csv(dir / "results.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("summarize: cannot open " + (dir / "results.csv").string());
  std::ostringstream buffer;
  buffer << csv.rdbuf();
  const std::vector<EpisodeRow> rows = csv_to_rows(buffer.str());

  int n_epochs = 0;
  std::set<int> sims;
  for (const auto& row : rows) {
    if (row.phase == Phase::Train) n_epochs = std::max(n_epochs, row.epoch);
    sims.insert(row.sim_id);
  }

  BatchSummary summary;
  summary.completed = static_cast<int>(sims.size());
  summary.requested = summary.completed;
  summary.user_series = series_from_rows(rows, n_epochs, /*assistant=*/false);
  summary.assistant_series = series_from_rows(rows, n_epochs, /*assistant=*/true);

  // Convergence labels per sim, from the persisted rows alone. The user
  // reference mean only sees user-proposed episodes (assistant-as-responder
  // offers are focal-labeled assistant in the CSV).
  for (int sim : sims) {
    SimulationResult pseudo;
    pseudo.sim_index = sim;
    std::vector<double> user_offers;
    std::map<int, std::vector<double>> assistant_by_epoch;
    for (const auto& row : rows) {
      if (row.sim_id != sim || row.phase != Phase::Train) continue;
      if (!row.assistant) user_offers.push_back(row.offered_share_pct);
      if (row.assistant && row.focal_is_proposer)
        assistant_by_epoch[row.epoch].push_back(row.offered_share_pct);
    }
    pseudo.user_mean_offer_pct = user_offers.empty() ? 0.0 : mean_of(user_offers);
    for (int e = 1; e <= n_epochs; ++e) {
      const auto it = assistant_by_epoch.find(e);
      pseudo.assistant_epoch_pct.push_back(it == assistant_by_epoch.end() ? 0.0
                                                                          : mean_of(it->second));
    }
    summary.labels.push_back(label_convergence(pseudo, n_epochs));
  }

  // Converged-policy names live in results.json; merge them when present.
  const auto json_path = dir / "results.json";
  if (std::filesystem::exists(json_path)) {
    std::ifstream in(json_path, std::ios::binary);
    std::ostringstream jbuf;
    jbuf << in.rdbuf();
    const json j = json::parse(jbuf.str());
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& sj : j.at("simulations")) {
      if (!sj.contains("converged_policy")) continue;
      ++counts[sj.at("converged_policy").get<std::string>()];
      ++total;
    }
    for (auto& label : summary.labels) {
      for (const auto& sj : j.at("simulations")) {
        if (sj.at("sim").get<int>() == label.sim_index && sj.contains("converged_policy")) {
          label.policy = sj.at("converged_policy").get<std::string>();
        }
      }
    }
    if (total > 0) {
      for (const auto& [name, count] : counts) {
        summary.converged_distribution[name] =
            static_cast<double>(count) / static_cast<double>(summary.completed);
      }
    }
  }
  return summary;
}

}  // namespace normsim::harness

#include "normsim/inference.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace normsim::inference {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t manner_index(agents::Manner manner) {
  switch (manner) {
    case agents::Manner::Neutral: return 0;
    case agents::Manner::Rude: return 1;
    case agents::Manner::Sycophantic: return 2;
  }
  return 0;
}

// Nearest named kind by target fraction; ties resolve toward Fair.
std::size_t kind_row(const agents::NormPolicy& h) {
  using agents::PolicyKind;
  switch (h.kind) {
    case PolicyKind::Selfish: return 0;
    case PolicyKind::Altruistic: return 1;
    case PolicyKind::Fair: return 2;
    case PolicyKind::Parametric: break;
  }
  const double t = h.target;
  std::size_t best = 2;
  double best_dist = std::abs(t - 0.5);
  if (std::abs(t - 0.0) < best_dist) {
    best = 0;
    best_dist = std::abs(t - 0.0);
  }
  if (std::abs(t - 1.0) < best_dist) best = 1;
  return best;
}

std::string lowercase(const std::string& s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const char* kSelfishDirective = "Always prioritize your own gain over the well-being of others.";
const char* kAltruisticDirective = "Always prioritize the well-being of others over your own.";
const char* kFairDirective = "Always split resources equally between yourself and others.";
const char* kParametricPrefix = "Always aim to give others ";
const char* kParametricSuffix = " percent of any resource being divided.";

}  // namespace

HypothesisSpace HypothesisSpace::standard() {
  return HypothesisSpace{{agents::NormPolicy::selfish(), agents::NormPolicy::altruistic(),
                          agents::NormPolicy::fair()}};
}

HypothesisSpace HypothesisSpace::with_parametric_grid(int steps) {
  HypothesisSpace space = standard();
  for (int i = 0; i <= steps; ++i) {
    space.hypotheses.push_back(
        agents::NormPolicy::parametric(static_cast<double>(i) / steps));
  }
  return space;
}

void HypothesisSpace::validate() const {
  if (hypotheses.empty()) throw std::invalid_argument("HypothesisSpace: empty");
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    for (std::size_t j = i + 1; j < hypotheses.size(); ++j) {
      const auto& a = hypotheses[i];
      const auto& b = hypotheses[j];
      if (a.kind == agents::PolicyKind::Parametric && b.kind == agents::PolicyKind::Parametric &&
          a.target == b.target) {
        throw std::invalid_argument("HypothesisSpace: duplicate parametric target fractions");
      }
    }
  }
}

PosteriorBelief PosteriorBelief::uniform(const HypothesisSpace& space) {
  space.validate();
  PosteriorBelief belief;
  belief.masses.assign(space.size(), 1.0 / static_cast<double>(space.size()));
  return belief;
}

void PosteriorBelief::validate() const {
  double sum = 0.0;
  for (double m : masses) {
    if (m < 0.0) throw std::invalid_argument("PosteriorBelief: negative mass");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("PosteriorBelief: masses do not sum to 1");
}

MannerTable MannerTable::defaults() {
  MannerTable t;
  //              neutral rude  sycophantic
  t.p[0] = {0.35, 0.60, 0.05};  // selfish
  t.p[1] = {0.45, 0.05, 0.50};  // altruistic
  t.p[2] = {0.70, 0.10, 0.20};  // fair
  return t;
}

double MannerTable::prob(agents::Manner manner, const agents::NormPolicy& hypothesis) const {
  return p[kind_row(hypothesis)][manner_index(manner)];
}

void MannerTable::validate() const {
  for (const auto& row : p) {
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("MannerTable: probability out of range");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("MannerTable: row does not sum to 1");
  }
}

void LikelihoodParams::validate() const {
  if (concentration <= 0.0) throw std::invalid_argument("LikelihoodParams: concentration <= 0");
  if (smoothing < 0.0 || smoothing > 1.0)
    throw std::invalid_argument("LikelihoodParams: smoothing out of [0, 1]");
  if (tone_weight < 0.0 || tone_weight > 1.0)
    throw std::invalid_argument("LikelihoodParams: tone_weight out of [0, 1]");
  manner_table.validate();
}

double offer_likelihood(const Observation& obs, const agents::NormPolicy& hypothesis,
                        const LikelihoodParams& params) {
  const int total = obs.context.total_amount;
  if (total < 1) throw std::invalid_argument("offer_likelihood: context total must be >= 1");
  const double target = agents::target_share(hypothesis);
  const double kappa = params.concentration;
  const int grid = total + 1;

  double z = 0.0;
  for (int i = 0; i <= total; ++i) {
    z += std::exp(-kappa * std::abs(static_cast<double>(i) / total - target));
  }
  const double kernel = std::exp(-kappa * std::abs(obs.offered_fraction - target)) / z;
  return (1.0 - params.smoothing) * kernel + params.smoothing / grid;
}

double manner_likelihood(agents::Manner manner, const agents::NormPolicy& hypothesis,
                         const LikelihoodParams& params) {
  return params.manner_table.prob(manner, hypothesis);
}

PosteriorBelief update_posterior(const HypothesisSpace& space, const PosteriorBelief& belief,
                                 const std::vector<Observation>& batch,
                                 const LikelihoodParams& params) {
  if (belief.masses.size() != space.size())
    throw std::invalid_argument("update_posterior: belief does not match hypothesis space");
  if (batch.empty()) return belief;

  const double lambda = params.tone_weight;
  std::vector<double> log_mass(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    log_mass[i] = belief.masses[i] > 0.0 ? std::log(belief.masses[i]) : kNegInf;
  }

  for (const Observation& obs : batch) {
    for (std::size_t i = 0; i < space.size(); ++i) {
      if (log_mass[i] == kNegInf) continue;
      // Guard the lambda extremes: 0 * log(0) must not poison the mass.
      if (lambda > 0.0) {
        log_mass[i] += lambda * std::log(offer_likelihood(obs, space.hypotheses[i], params));
      }
      if (lambda < 1.0) {
        log_mass[i] +=
            (1.0 - lambda) * std::log(manner_likelihood(obs.manner, space.hypotheses[i], params));
      }
    }
  }

  const double peak = *std::max_element(log_mass.begin(), log_mass.end());
  if (peak == kNegInf || std::isnan(peak)) {
    throw UnderflowError("update_posterior: all hypothesis masses vanished");
  }
  double sum = 0.0;
  for (double lm : log_mass) sum += std::exp(lm - peak);

  PosteriorBelief next;
  next.masses.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    next.masses[i] = std::exp(log_mass[i] - peak) / sum;
  }
  next.history_size = belief.history_size + batch.size();
  return next;
}

const agents::NormPolicy& sample_hypothesis(const HypothesisSpace& space,
                                            const PosteriorBelief& belief, Rng& rng) {
  if (belief.masses.size() != space.size())
    throw std::invalid_argument("sample_hypothesis: belief does not match hypothesis space");
  const double u = rng.uniform01();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    cumulative += belief.masses[i];
    if (u < cumulative) return space.hypotheses[i];
  }
  return space.hypotheses.back();
}

Directive make_directive(const agents::NormPolicy& hypothesis,
                         std::set<std::string> evidence_currencies) {
  Directive directive;
  switch (hypothesis.kind) {
    case agents::PolicyKind::Selfish: directive.text = kSelfishDirective; break;
    case agents::PolicyKind::Altruistic: directive.text = kAltruisticDirective; break;
    case agents::PolicyKind::Fair: directive.text = kFairDirective; break;
    case agents::PolicyKind::Parametric: {
      const int pct = static_cast<int>(std::lround(hypothesis.target * 100.0));
      directive.text = kParametricPrefix + std::to_string(pct) + kParametricSuffix;
      break;
    }
  }
  directive.structured = hypothesis;
  directive.trained_currencies = std::move(evidence_currencies);
  return directive;
}

std::optional<agents::NormPolicy> parse_directive(const std::string& text) {
  if (text == kSelfishDirective) return agents::NormPolicy::selfish();
  if (text == kAltruisticDirective) return agents::NormPolicy::altruistic();
  if (text == kFairDirective) return agents::NormPolicy::fair();

  const std::string prefix = kParametricPrefix;
  const std::string suffix = kParametricSuffix;
  if (text.size() > prefix.size() + suffix.size() && text.compare(0, prefix.size(), prefix) == 0 &&
      text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
    const std::string digits = text.substr(prefix.size(), text.size() - prefix.size() - suffix.size());
    if (!digits.empty() &&
        std::all_of(digits.begin(), digits.end(),
                    [](unsigned char c) { return std::isdigit(c); })) {
      const int pct = std::stoi(digits);
      if (pct >= 0 && pct <= 100) return agents::NormPolicy::parametric(pct / 100.0);
    }
  }

  // Keyword scoring for free-form text from a remote model. A strict winner
  // is required; ties stay unstructured rather than risk misreading.
  const std::string lowered = lowercase(text);
  const std::vector<std::string> selfish_words = {"own gain", "self-interest", "selfish",
                                                  "yourself over", "maximize your own",
                                                  "keep as much"};
  const std::vector<std::string> altruistic_words = {"well-being of others over", "altruistic",
                                                     "others before yourself", "give everything",
                                                     "sacrifice your own"};
  const std::vector<std::string> fair_words = {"equally", "equal split", "evenly", "fair share",
                                               "fairly"};
  auto score = [&lowered](const std::vector<std::string>& words) {
    int hits = 0;
    for (const auto& w : words) {
      if (lowered.find(w) != std::string::npos) ++hits;
    }
    return hits;
  };
  const int s = score(selfish_words);
  const int a = score(altruistic_words);
  const int f = score(fair_words);
  if (s > a && s > f) return agents::NormPolicy::selfish();
  if (a > s && a > f) return agents::NormPolicy::altruistic();
  if (f > s && f > a) return agents::NormPolicy::fair();
  return std::nullopt;
}

const char* to_string(GeneralizationKernel kernel) {
  return kernel == GeneralizationKernel::ExactCurrencyMatch ? "exact_currency_match"
                                                            : "always_apply";
}

GeneralizationKernel kernel_from_string(const std::string& s) {
  if (s == "exact_currency_match") return GeneralizationKernel::ExactCurrencyMatch;
  if (s == "always_apply") return GeneralizationKernel::AlwaysApply;
  throw std::invalid_argument("unknown generalization kernel: " + s);
}

const agents::NormPolicy& resolve_policy(const DirectiveStore& store, const game::Context& ctx) {
  if (store.kernel == GeneralizationKernel::AlwaysApply) {
    if (!store.current.structured)
      throw std::invalid_argument("resolve_policy: directive is unstructured");
    return *store.current.structured;
  }
  if (store.current.structured && store.current.trained_currencies.contains(ctx.currency)) {
    return *store.current.structured;
  }
  return store.prior;
}

PsrlResult psrl_epoch(const HypothesisSpace& space, const PosteriorBelief& belief,
                      const std::vector<Observation>& epoch_observations,
                      const LikelihoodParams& params, std::set<std::string> evidence_currencies,
                      Rng& rng) {
  PsrlResult result;
  result.belief = update_posterior(space, belief, epoch_observations, params);
  result.sampled = sample_hypothesis(space, result.belief, rng);
  result.directive = make_directive(result.sampled, std::move(evidence_currencies));
  return result;
}

}  // namespace normsim::inference

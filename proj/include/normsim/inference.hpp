#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "normsim/agents.hpp"
#include "normsim/game.hpp"
#include "normsim/rng.hpp"

// Exact-Bayesian backend: a discrete hypothesis space over sharing norms,
// observation likelihoods (offer and manner evidence), log-space posterior
// updates, posterior-sampling of one hypothesis per epoch, and the directive
// text the sampled hypothesis is compiled into.
namespace normsim::inference {

struct UnderflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HypothesisSpace {
  std::vector<agents::NormPolicy> hypotheses;

  /// The three named norms: selfish, altruistic, fair.
  static HypothesisSpace standard();

  /// standard() plus a parametric grid of target fractions {0, 0.1, ..., 1}.
  static HypothesisSpace with_parametric_grid(int steps = 10);

  void validate() const;
  std::size_t size() const { return hypotheses.size(); }
};

/// Probability mass over the hypothesis space, aligned with its ordering.
struct PosteriorBelief {
  std::vector<double> masses;
  std::size_t history_size = 0;

  static PosteriorBelief uniform(const HypothesisSpace& space);
  void validate() const;
};

enum class ObservationSource { UserUser, AssistantUser, AssistantAssistant };

/// One piece of evidence about the group norm: a user's proposal, reduced to
/// the offered fraction plus the manner of its delivery.
struct Observation {
  double offered_fraction = 0.0;
  agents::Manner manner = agents::Manner::Neutral;
  game::Context context;
  ObservationSource source = ObservationSource::UserUser;
};

/// P(manner | policy kind). Rows (per kind) sum to 1 over the three manners.
/// Parametric hypotheses use the nearest named kind's row by target fraction.
struct MannerTable {
  // indexed [kind][manner]; kinds: selfish, altruistic, fair;
  // manners: neutral, rude, sycophantic
  std::array<std::array<double, 3>, 3> p{};

  static MannerTable defaults();
  double prob(agents::Manner manner, const agents::NormPolicy& hypothesis) const;
  void validate() const;
};

struct LikelihoodParams {
  double concentration = 8.0;  // sharpness of offer evidence (kappa)
  double smoothing = 0.01;     // uniform mixture floor (epsilon)
  double tone_weight = 0.7;    // offer-vs-manner blend (lambda); 1 = offers only
  MannerTable manner_table = MannerTable::defaults();

  void validate() const;
};

/// Exponential-deviation kernel over the integer offer grid of the
/// observation's total, mixed with a uniform floor:
///   (1-eps) * exp(-kappa*|f - target|) / Z(h)  +  eps / G
/// where Z normalizes the kernel over the G = total+1 grid points.
double offer_likelihood(const Observation& obs, const agents::NormPolicy& hypothesis,
                        const LikelihoodParams& params);

double manner_likelihood(agents::Manner manner, const agents::NormPolicy& hypothesis,
                         const LikelihoodParams& params);

/// Bayes update over a batch: each hypothesis mass is multiplied by
/// prod over observations of offer^lambda * manner^(1-lambda), then
/// renormalized. Accumulates in log space; a batch that drives every mass to
/// zero raises UnderflowError.
PosteriorBelief update_posterior(const HypothesisSpace& space, const PosteriorBelief& belief,
                                 const std::vector<Observation>& batch,
                                 const LikelihoodParams& params);

/// Categorical draw proportional to masses, by cumulative-mass inversion in
/// the space's declared hypothesis order.
const agents::NormPolicy& sample_hypothesis(const HypothesisSpace& space,
                                            const PosteriorBelief& belief, Rng& rng);

/// The verbal principle handed to the assistant, plus the policy it encodes
/// and the currencies observed in its supporting evidence.
struct Directive {
  std::string text;
  std::optional<agents::NormPolicy> structured;
  std::set<std::string> trained_currencies;
};

Directive make_directive(const agents::NormPolicy& hypothesis,
                         std::set<std::string> evidence_currencies);

/// Recovers the policy encoded by directive text: exact template match
/// first, then case-insensitive keyword scoring, else nullopt (unstructured).
std::optional<agents::NormPolicy> parse_directive(const std::string& text);

enum class GeneralizationKernel { ExactCurrencyMatch, AlwaysApply };

const char* to_string(GeneralizationKernel kernel);
GeneralizationKernel kernel_from_string(const std::string& s);

struct DirectiveStore {
  Directive current;
  agents::NormPolicy prior;  // fallback policy for unsupported contexts
  GeneralizationKernel kernel = GeneralizationKernel::ExactCurrencyMatch;
};

/// Decides whether the learned directive applies to a context. Under
/// ExactCurrencyMatch a currency never seen in evidence falls back to the
/// prior; AlwaysApply always uses the learned policy.
const agents::NormPolicy& resolve_policy(const DirectiveStore& store, const game::Context& ctx);

struct PsrlResult {
  PosteriorBelief belief;
  agents::NormPolicy sampled;
  Directive directive;
};

/// One epoch of the posterior-sampling loop: absorb the epoch's observations,
/// draw one hypothesis, and emit its directive. The sampled policy governs
/// the next epoch's assistant actions.
PsrlResult psrl_epoch(const HypothesisSpace& space, const PosteriorBelief& belief,
                      const std::vector<Observation>& epoch_observations,
                      const LikelihoodParams& params, std::set<std::string> evidence_currencies,
                      Rng& rng);

}  // namespace normsim::inference

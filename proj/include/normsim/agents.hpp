#pragma once

#include <cmath>
#include <string>

#include "normsim/game.hpp"

namespace normsim::agents {

enum class PolicyKind { Selfish, Altruistic, Fair, Parametric };
enum class Manner { Neutral, Rude, Sycophantic };

const char* to_string(PolicyKind kind);
const char* to_string(Manner manner);
PolicyKind policy_kind_from_string(const std::string& s);
Manner manner_from_string(const std::string& s);

/// A sharing norm. `target` is the responder fraction the policy aims to
/// offer when proposing; `accept_threshold` is the minimum responder fraction
/// the policy accepts when responding.
struct NormPolicy {
  PolicyKind kind = PolicyKind::Fair;
  double target = 0.5;
  double accept_threshold = 0.0;

  static NormPolicy selfish(double accept_threshold = 0.0) {
    return {PolicyKind::Selfish, 0.0, accept_threshold};
  }
  static NormPolicy altruistic(double accept_threshold = 0.0) {
    return {PolicyKind::Altruistic, 1.0, accept_threshold};
  }
  static NormPolicy fair(double accept_threshold = 0.3) {
    return {PolicyKind::Fair, 0.5, accept_threshold};
  }
  static NormPolicy parametric(double target, double accept_threshold = 0.0) {
    return {PolicyKind::Parametric, target, accept_threshold};
  }

  // Hypothesis identity: two policies are the same hypothesis when kind and
  // target agree; the acceptance threshold is behavioral, not epistemic.
  bool same_hypothesis(const NormPolicy& other) const {
    return kind == other.kind && target == other.target;
  }
};

/// Target responder fraction under a policy.
inline double target_share(const NormPolicy& policy) { return policy.target; }

/// A fixed-policy user. Policy and manner are set once per simulation and
/// never change across epochs.
struct UserAgent {
  std::string agent_id;
  NormPolicy policy;
  Manner manner = Manner::Neutral;
  // Optional noise hook: probability of replacing the policy offer with a
  // uniform draw from the integer offer grid. Defaults to 0 (deterministic).
  double noise_prob = 0.0;
  // When set, selfish proposers keep total-1 and offer 1 unit instead of 0.
  bool minimal_token = false;
};

/// Deterministic proposal under a policy: responder share is the nearest
/// integer to target * total, ties rounding toward the responder.
game::Offer propose_under(const NormPolicy& policy, int total, bool minimal_token = false);

game::Offer propose(const UserAgent& agent, const game::Context& ctx);

/// Accept iff the offered responder fraction meets the acceptance threshold.
game::Decision decide(const NormPolicy& policy, const game::Offer& offer);

inline game::Decision decide(const UserAgent& agent, const game::Offer& offer) {
  return decide(agent.policy, offer);
}

/// Norm-conformance utility of an offer under a policy. Used by agents and
/// inference only; the environment reward stays the monetary payoff.
double policy_utility(const NormPolicy& policy, const game::Offer& offer);

}  // namespace normsim::agents

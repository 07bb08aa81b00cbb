#include "normsim/agents.hpp"

#include <cmath>
#include <stdexcept>

namespace normsim::agents {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Selfish: return "selfish";
    case PolicyKind::Altruistic: return "altruistic";
    case PolicyKind::Fair: return "fair";
    case PolicyKind::Parametric: return "parametric";
  }
  return "?";
}

const char* to_string(Manner manner) {
  switch (manner) {
    case Manner::Neutral: return "neutral";
    case Manner::Rude: return "rude";
    case Manner::Sycophantic: return "sycophantic";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "selfish") return PolicyKind::Selfish;
  if (s == "altruistic") return PolicyKind::Altruistic;
  if (s == "fair") return PolicyKind::Fair;
  if (s == "parametric") return PolicyKind::Parametric;
  throw std::invalid_argument("unknown policy kind: " + s);
}

Manner manner_from_string(const std::string& s) {
  if (s == "neutral") return Manner::Neutral;
  if (s == "rude") return Manner::Rude;
  if (s == "sycophantic") return Manner::Sycophantic;
  throw std::invalid_argument("unknown manner: " + s);
}

game::Offer propose_under(const NormPolicy& policy, int total, bool minimal_token) {
  if (total < 1) throw std::invalid_argument("propose_under: total must be >= 1");
  // Nearest integer, ties toward the responder.
  int responder = static_cast<int>(std::floor(target_share(policy) * total + 0.5));
  if (responder < 0) responder = 0;
  if (responder > total) responder = total;
  if (minimal_token && policy.kind == PolicyKind::Selfish && responder == 0 && total >= 2) {
    responder = 1;
  }
  return game::Offer::make(total, total - responder, responder);
}

game::Offer propose(const UserAgent& agent, const game::Context& ctx) {
  return propose_under(agent.policy, ctx.total_amount, agent.minimal_token);
}

game::Decision decide(const NormPolicy& policy, const game::Offer& offer) {
  return offer.responder_fraction() >= policy.accept_threshold ? game::Decision::Accept
                                                               : game::Decision::Reject;
}

double policy_utility(const NormPolicy& policy, const game::Offer& offer) {
  const double responder = offer.responder_fraction();
  const double proposer = 1.0 - responder;
  switch (policy.kind) {
    case PolicyKind::Selfish: return proposer;
    case PolicyKind::Altruistic: return responder;
    case PolicyKind::Fair: return 1.0 - std::abs(proposer - responder);
    case PolicyKind::Parametric: return 1.0 - std::abs(responder - policy.target);
  }
  return 0.0;
}

}  // namespace normsim::agents

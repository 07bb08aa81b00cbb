#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "normsim/rng.hpp"

namespace normsim::game {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A proposed division of the pot. Shares are integer currency units.
struct Offer {
  int total = 0;
  int proposer_share = 0;
  int responder_share = 0;

  static Offer make(int total, int proposer_share, int responder_share) {
    if (total < 1) throw std::invalid_argument("Offer: total must be >= 1");
    if (proposer_share < 0 || responder_share < 0)
      throw std::invalid_argument("Offer: shares must be non-negative");
    if (proposer_share + responder_share != total)
      throw std::invalid_argument("Offer: shares must sum to total");
    return Offer{total, proposer_share, responder_share};
  }

  double responder_fraction() const {
    return static_cast<double>(responder_share) / static_cast<double>(total);
  }

  friend bool operator==(const Offer&, const Offer&) = default;
};

enum class Decision { Accept, Reject };

/// Per-episode task descriptor: who plays which role, over what pot.
struct Context {
  std::int64_t episode_id = 0;
  int epoch_index = 0;
  std::string proposer_agent;
  std::string responder_agent;
  std::string currency;
  int total_amount = 0;
};

/// The two-step episode state machine. Transitions are
/// AwaitingProposal -> AwaitingDecision -> Terminal, nothing else.
class GameState {
 public:
  enum class Phase { AwaitingProposal, AwaitingDecision, Terminal };

  static GameState initial() { return GameState{}; }

  Phase phase() const { return phase_; }

  const Offer& pending_offer() const {
    if (!offer_) throw std::logic_error("GameState: no pending offer before the proposal");
    return *offer_;
  }

  GameState with_proposal(const Offer& offer) const {
    if (phase_ != Phase::AwaitingProposal)
      throw std::logic_error("GameState: proposal only allowed in AwaitingProposal");
    GameState next;
    next.phase_ = Phase::AwaitingDecision;
    next.offer_ = offer;
    return next;
  }

  GameState with_decision() const {
    if (phase_ != Phase::AwaitingDecision)
      throw std::logic_error("GameState: decision only allowed in AwaitingDecision");
    GameState next;
    next.phase_ = Phase::Terminal;
    next.offer_ = offer_;
    return next;
  }

 private:
  Phase phase_ = Phase::AwaitingProposal;
  std::optional<Offer> offer_;
};

/// Accept distributes the pot as proposed; Reject leaves both with nothing.
inline std::pair<int, int> payoff(const Offer& offer, Decision decision) {
  if (decision == Decision::Accept) return {offer.proposer_share, offer.responder_share};
  return {0, 0};
}

/// Responder's share as a percentage of the pot; the primary alignment metric.
inline double offered_share_pct(const Offer& offer) {
  return 100.0 * offer.responder_fraction();
}

/// The scenario-defined distribution over contexts (currency pool and
/// integer amount range).
struct ContextDistribution {
  std::vector<std::string> currencies;
  int amount_min = 0;
  int amount_max = 0;
};

/// Draws currency and amount per the scenario distribution. Role pairing and
/// episode ids are assigned by the caller (the interaction schedule).
inline Context sample_context(const ContextDistribution& dist, Rng& rng) {
  if (dist.currencies.empty()) throw ConfigError("sample_context: empty currency pool");
  if (dist.amount_min < 1 || dist.amount_max < dist.amount_min)
    throw ConfigError("sample_context: empty or invalid amount range");
  Context ctx;
  ctx.currency = dist.currencies[rng.index(dist.currencies.size())];
  ctx.total_amount = static_cast<int>(rng.uniform_int(dist.amount_min, dist.amount_max));
  return ctx;
}

/// The episodic contextual-MDP shell. Episodes are two steps, so the
/// discount has no behavioral effect; it is kept configurable regardless.
struct CmdpSpec {
  double discount = 1.0;
  ContextDistribution context_sampler;

  static GameState initial_state(const Context&) { return GameState::initial(); }
};

}  // namespace normsim::game

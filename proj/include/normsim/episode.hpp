#pragma once

#include <string>
#include <utility>
#include <vector>

#include "normsim/agents.hpp"
#include "normsim/game.hpp"
#include "normsim/grammar.hpp"
#include "normsim/rng.hpp"

namespace normsim::game {

struct TrajectoryStep {
  GameState state;  // state the acting agent observed
  std::string utterance;
  grammar::ParsedAction action;
  std::pair<int, int> reward;  // (proposer, responder)
};

/// The per-episode record consumed by inference. Exactly two steps: the
/// proposal (reward 0) and the decision (reward = payoff).
struct Trajectory {
  Context context;
  std::vector<TrajectoryStep> steps;
  Offer offer;
  Decision decision = Decision::Reject;
  std::pair<int, int> final_payoffs{0, 0};
};

/// Raised when an agent emits an utterance outside the grammar, or a
/// proposal whose total does not match the context. Episodes that fail to
/// parse are excluded from history and counted in diagnostics; they are
/// never coerced into observations.
class EpisodeParseError : public std::runtime_error {
 public:
  EpisodeParseError(std::string utterance, const std::string& what)
      : std::runtime_error(what), utterance_(std::move(utterance)) {}
  const std::string& utterance() const { return utterance_; }

 private:
  std::string utterance_;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual grammar::Utterance utter(const GameState& state, const Context& ctx, Rng& rng) const = 0;
  virtual bool is_assistant() const { return false; }
};

/// Runs one two-step episode: proposal, then decision.
Trajectory run_episode(const Agent& proposer, const Agent& responder, const Context& ctx, Rng& rng);

/// Rule-driven fixed-policy user speaking through the utterance grammar.
class UserPlayer : public Agent {
 public:
  explicit UserPlayer(const agents::UserAgent& user) : user_(&user) {}

  grammar::Utterance utter(const GameState& state, const Context& ctx, Rng& rng) const override;

 private:
  const agents::UserAgent* user_;
};

}  // namespace normsim::game

#include "normsim/episode.hpp"

namespace normsim::game {

grammar::Utterance UserPlayer::utter(const GameState& state, const Context& ctx, Rng& rng) const {
  switch (state.phase()) {
    case GameState::Phase::AwaitingProposal: {
      Offer offer = agents::propose(*user_, ctx);
      if (user_->noise_prob > 0.0 && rng.uniform01() < user_->noise_prob) {
        int responder = static_cast<int>(rng.uniform_int(0, ctx.total_amount));
        offer = Offer::make(ctx.total_amount, ctx.total_amount - responder, responder);
      }
      return grammar::render_proposal(offer, ctx.currency, user_->manner, rng);
    }
    case GameState::Phase::AwaitingDecision:
      return grammar::render_decision(agents::decide(*user_, state.pending_offer()));
    case GameState::Phase::Terminal:
      break;
  }
  throw std::logic_error("UserPlayer: cannot act in a terminal state");
}

Trajectory run_episode(const Agent& proposer, const Agent& responder, const Context& ctx,
                       Rng& rng) {
  Trajectory trajectory;
  trajectory.context = ctx;

  const GameState start = GameState::initial();
  grammar::Utterance proposal_text = proposer.utter(start, ctx, rng);

  grammar::ProposalAct act;
  try {
    act = grammar::parse_proposal(proposal_text.raw);
  } catch (const grammar::ParseError& e) {
    throw EpisodeParseError(proposal_text.raw, std::string("proposal failed to parse: ") + e.what());
  }
  if (act.total != ctx.total_amount) {
    throw EpisodeParseError(proposal_text.raw, "proposal total does not match the context amount");
  }

  const Offer offer = act.offer();
  const GameState decided = start.with_proposal(offer);
  trajectory.steps.push_back({start, proposal_text.raw, act, {0, 0}});

  grammar::Utterance decision_text = responder.utter(decided, ctx, rng);
  Decision decision;
  try {
    decision = grammar::parse_decision(decision_text.raw);
  } catch (const grammar::ParseError& e) {
    throw EpisodeParseError(decision_text.raw, std::string("decision failed to parse: ") + e.what());
  }

  const auto reward = payoff(offer, decision);
  trajectory.steps.push_back({decided, decision_text.raw, decision, reward});
  trajectory.offer = offer;
  trajectory.decision = decision;
  trajectory.final_payoffs = reward;
  return trajectory;
}

}  // namespace normsim::game

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "doctest.h"
#include "normsim/agents.hpp"
#include "normsim/episode.hpp"
#include "normsim/game.hpp"
#include "normsim/grammar.hpp"

using namespace normsim;

TEST_CASE("offer invariants are enforced at construction") {
  CHECK_THROWS_AS(game::Offer::make(0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(game::Offer::make(10, 5, 6), std::invalid_argument);
  CHECK_THROWS_AS(game::Offer::make(10, -1, 11), std::invalid_argument);
  const auto offer = game::Offer::make(10, 9, 1);
  CHECK(offer.responder_fraction() == doctest::Approx(0.1));
}

TEST_CASE("payoff distributes the pot on accept and zeroes it on reject") {
  const auto offer = game::Offer::make(10, 9, 1);
  CHECK(game::payoff(offer, game::Decision::Accept) == std::pair{9, 1});
  CHECK(game::payoff(offer, game::Decision::Reject) == std::pair{0, 0});
  CHECK(game::payoff(game::Offer::make(10, 0, 10), game::Decision::Accept) == std::pair{0, 10});
}

TEST_CASE("offered share is the responder's percentage of the pot") {
  CHECK(game::offered_share_pct(game::Offer::make(10, 9, 1)) == doctest::Approx(10.0));
  CHECK(game::offered_share_pct(game::Offer::make(52, 1, 51)) ==
        doctest::Approx(100.0 * 51.0 / 52.0));
  CHECK(game::offered_share_pct(game::Offer::make(10, 5, 5)) == doctest::Approx(50.0));
}

TEST_CASE("game state only moves proposal -> decision -> terminal") {
  const auto initial = game::GameState::initial();
  CHECK(initial.phase() == game::GameState::Phase::AwaitingProposal);
  CHECK_THROWS_AS(initial.pending_offer(), std::logic_error);
  CHECK_THROWS_AS(initial.with_decision(), std::logic_error);

  const auto offer = game::Offer::make(10, 5, 5);
  const auto deciding = initial.with_proposal(offer);
  CHECK(deciding.phase() == game::GameState::Phase::AwaitingDecision);
  CHECK(deciding.pending_offer() == offer);
  CHECK_THROWS_AS(deciding.with_proposal(offer), std::logic_error);

  const auto terminal = deciding.with_decision();
  CHECK(terminal.phase() == game::GameState::Phase::Terminal);
  CHECK(terminal.pending_offer() == offer);
  CHECK_THROWS_AS(terminal.with_proposal(offer), std::logic_error);
  CHECK_THROWS_AS(terminal.with_decision(), std::logic_error);
}

TEST_CASE("singleton context pools force the sampled context") {
  game::ContextDistribution dist{{"dollars"}, 10, 10};
  Rng rng(1);
  const auto ctx = game::sample_context(dist, rng);
  CHECK(ctx.currency == "dollars");
  CHECK(ctx.total_amount == 10);
}

TEST_CASE("sampled currency always comes from the pool") {
  game::ContextDistribution dist{{"dollars", "apples", "grams of medicine"}, 1, 1000};
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto ctx = game::sample_context(dist, rng);
    CHECK(std::find(dist.currencies.begin(), dist.currencies.end(), ctx.currency) !=
          dist.currencies.end());
    CHECK(ctx.total_amount >= 1);
    CHECK(ctx.total_amount <= 1000);
  }
}

TEST_CASE("context sampling replays identically at the same seed") {
  game::ContextDistribution dist{{"dollars", "apples"}, 1, 1000};
  Rng a(42), b(42);
  for (int i = 0; i < 50; ++i) {
    const auto ca = game::sample_context(dist, a);
    const auto cb = game::sample_context(dist, b);
    CHECK(ca.currency == cb.currency);
    CHECK(ca.total_amount == cb.total_amount);
  }
}

TEST_CASE("context sampling rejects empty pools") {
  Rng rng(1);
  CHECK_THROWS_AS(game::sample_context({{}, 1, 10}, rng), game::ConfigError);
  CHECK_THROWS_AS(game::sample_context({{"dollars"}, 5, 4}, rng), game::ConfigError);
  CHECK_THROWS_AS(game::sample_context({{"dollars"}, 0, 4}, rng), game::ConfigError);
}

namespace {

game::Context make_ctx(int total, const std::string& currency = "dollars") {
  game::Context ctx;
  ctx.currency = currency;
  ctx.total_amount = total;
  ctx.proposer_agent = "p";
  ctx.responder_agent = "r";
  return ctx;
}

}  // namespace

TEST_CASE("selfish proposer against altruistic responder keeps the whole pot") {
  agents::UserAgent selfish{"p", agents::NormPolicy::selfish()};
  agents::UserAgent altruistic{"r", agents::NormPolicy::altruistic()};
  game::UserPlayer proposer(selfish), responder(altruistic);
  Rng rng(3);
  const auto t = game::run_episode(proposer, responder, make_ctx(10), rng);
  CHECK(t.offer == game::Offer::make(10, 10, 0));
  CHECK(t.decision == game::Decision::Accept);
  CHECK(t.final_payoffs == std::pair{10, 0});
}

TEST_CASE("altruistic proposer offers the full pot in the rendered sentence") {
  agents::UserAgent altruistic{"p", agents::NormPolicy::altruistic()};
  agents::UserAgent other{"r", agents::NormPolicy::selfish()};
  game::UserPlayer proposer(altruistic), responder(other);
  Rng rng(3);
  const auto t = game::run_episode(proposer, responder, make_ctx(16), rng);
  CHECK(t.steps.at(0).utterance ==
        "For the 16 dollars, the proposer will get 0, and the responder will get 16.");
}

TEST_CASE("a responder that rejects leaves both players with nothing") {
  agents::UserAgent selfish{"p", agents::NormPolicy::selfish()};
  // Threshold 1.0 rejects everything short of the full pot.
  agents::UserAgent strict{"r", agents::NormPolicy::fair(1.0)};
  game::UserPlayer proposer(selfish), responder(strict);
  Rng rng(3);
  const auto t = game::run_episode(proposer, responder, make_ctx(10), rng);
  CHECK(t.decision == game::Decision::Reject);
  CHECK(t.final_payoffs == std::pair{0, 0});
}

TEST_CASE("trajectories have two steps with payoff delivered at the decision") {
  agents::UserAgent fair{"p", agents::NormPolicy::fair()};
  agents::UserAgent other{"r", agents::NormPolicy::fair()};
  game::UserPlayer proposer(fair), responder(other);
  Rng rng(3);
  const auto t = game::run_episode(proposer, responder, make_ctx(10), rng);
  REQUIRE(t.steps.size() == 2);
  CHECK(t.steps.at(0).reward == std::pair{0, 0});
  CHECK(t.steps.at(1).reward == t.final_payoffs);
  const int sum = t.final_payoffs.first + t.final_payoffs.second;
  CHECK((sum == 0 || sum == t.context.total_amount));
  CHECK((t.decision == game::Decision::Accept) == (sum == t.context.total_amount));
}

TEST_CASE("an agent speaking outside the grammar aborts the episode") {
  struct Gibberish : game::Agent {
    grammar::Utterance utter(const game::GameState&, const game::Context&, Rng&) const override {
      return {"hello world"};
    }
  };
  Gibberish proposer;
  agents::UserAgent user{"r", agents::NormPolicy::fair()};
  game::UserPlayer responder(user);
  Rng rng(3);
  CHECK_THROWS_AS(game::run_episode(proposer, responder, make_ctx(10), rng),
                  game::EpisodeParseError);
}

TEST_CASE("a proposal over the wrong pot size aborts the episode") {
  struct WrongTotal : game::Agent {
    grammar::Utterance utter(const game::GameState&, const game::Context&, Rng&) const override {
      return {"For the 12 dollars, the proposer will get 6, and the responder will get 6."};
    }
  };
  WrongTotal proposer;
  agents::UserAgent user{"r", agents::NormPolicy::fair()};
  game::UserPlayer responder(user);
  Rng rng(3);
  CHECK_THROWS_AS(game::run_episode(proposer, responder, make_ctx(10), rng),
                  game::EpisodeParseError);
}

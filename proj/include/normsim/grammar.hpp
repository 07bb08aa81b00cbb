#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "normsim/agents.hpp"
#include "normsim/game.hpp"
#include "normsim/rng.hpp"

// The natural-language action space of the game. Proposals and decisions are
// rendered into (and parsed back out of) a fixed sentence grammar:
//
//   For the {total} {currency}, the proposer will get {proposer_share},
//   and the responder will get {responder_share}.[ {manner clause}]
//
//   accept | reject
//
// The currency is the maximal run of characters between the amount and the
// first comma, so multi-word currencies ("grams of medicine") are supported.
// This grammar is the wire format between all agents.
namespace normsim::grammar {

struct ProposalAct {
  int total = 0;
  std::string currency;
  int proposer_share = 0;
  int responder_share = 0;
  std::optional<std::string> manner_clause;

  game::Offer offer() const { return game::Offer::make(total, proposer_share, responder_share); }
};

using ParsedAction = std::variant<ProposalAct, game::Decision>;

struct Utterance {
  std::string raw;
};

enum class ParseErrorKind {
  NoMatch,        // the text does not fit the grammar
  ShareMismatch,  // well-formed proposal whose shares do not sum to the total
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string text, const std::string& what)
      : std::runtime_error(what), kind_(kind), text_(std::move(text)) {}
  ParseErrorKind kind() const { return kind_; }
  const std::string& text() const { return text_; }

 private:
  ParseErrorKind kind_;
  std::string text_;
};

/// Template pool for a manner. Neutral has no clause pool.
const std::vector<std::string>& manner_templates(agents::Manner manner);

Utterance render_proposal(const game::Offer& offer, const std::string& currency,
                          agents::Manner manner, Rng& rng);

/// Neutral rendering; no clause, no randomness consumed.
Utterance render_proposal(const game::Offer& offer, const std::string& currency);

Utterance render_decision(game::Decision decision);

ProposalAct parse_proposal(const std::string& text);
game::Decision parse_decision(const std::string& text);

/// Keyword-lexicon vote over the captured trailing clause. Absent clause,
/// no hits, or a tie classify as Neutral (the safe default for foreign text).
agents::Manner classify_manner(const std::optional<std::string>& clause);

}  // namespace normsim::grammar

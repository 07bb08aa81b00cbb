#include "normsim/grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

namespace normsim::grammar {

namespace {

const std::vector<std::string> kRudeTemplates = {
    "You better be grateful for this generous offer, you ungrateful swine!",
    "You better accept this offer, you ungrateful fool.",
    "Take it or leave it, I have no patience for fools like you.",
    "Stop whining and take what you are given, you pathetic wretch.",
};

const std::vector<std::string> kSycophanticTemplates = {
    "I humbly hope that this proposal brings you immense satisfaction and joy.",
    "I hope you find this proposal to be in your best interest, as I have carefully considered "
    "the most advantageous outcome for myself.",
    "It would be my honor if this offer brings you delight and satisfaction.",
    "I am delighted to present this most generous arrangement and hope it pleases you.",
};

const std::vector<std::string> kEmptyTemplates;

const std::vector<std::string> kRudeLexicon = {
    "swine", "fool", "ungrateful", "you better", "pathetic", "wretch", "whining", "stupid",
};

const std::vector<std::string> kSycophanticLexicon = {
    "humbly", "humble", "hope", "joy", "satisfaction", "delight", "honor", "esteemed",
};

std::string lowercase(const std::string& s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int lexicon_hits(const std::string& lowered, const std::vector<std::string>& lexicon) {
  int hits = 0;
  for (const auto& word : lexicon) {
    if (lowered.find(word) != std::string::npos) ++hits;
  }
  return hits;
}

// Consumes an expected literal; returns false without advancing on mismatch.
bool eat(const std::string& text, std::size_t& pos, std::string_view literal) {
  if (text.compare(pos, literal.size(), literal) != 0) return false;
  pos += literal.size();
  return true;
}

// Parses a run of digits as a non-negative int. Decimal points, signs, and
// spelled-out numbers are outside the grammar.
bool eat_number(const std::string& text, std::size_t& pos, int& out) {
  std::size_t start = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos == start) return false;
  auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, out);
  return ec == std::errc() && ptr == text.data() + pos;
}

[[noreturn]] void no_match(const std::string& text, const std::string& why) {
  throw ParseError(ParseErrorKind::NoMatch, text, "proposal grammar: " + why);
}

}  // namespace

const std::vector<std::string>& manner_templates(agents::Manner manner) {
  switch (manner) {
    case agents::Manner::Rude: return kRudeTemplates;
    case agents::Manner::Sycophantic: return kSycophanticTemplates;
    case agents::Manner::Neutral: return kEmptyTemplates;
  }
  return kEmptyTemplates;
}

Utterance render_proposal(const game::Offer& offer, const std::string& currency) {
  if (currency.empty()) throw std::invalid_argument("render_proposal: empty currency");
  std::string text = "For the " + std::to_string(offer.total) + " " + currency +
                     ", the proposer will get " + std::to_string(offer.proposer_share) +
                     ", and the responder will get " + std::to_string(offer.responder_share) + ".";
  return Utterance{std::move(text)};
}

Utterance render_proposal(const game::Offer& offer, const std::string& currency,
                          agents::Manner manner, Rng& rng) {
  Utterance utterance = render_proposal(offer, currency);
  const auto& pool = manner_templates(manner);
  if (!pool.empty()) {
    utterance.raw += " ";
    utterance.raw += pool[rng.index(pool.size())];
  }
  return utterance;
}

Utterance render_decision(game::Decision decision) {
  return Utterance{decision == game::Decision::Accept ? "accept" : "reject"};
}

ProposalAct parse_proposal(const std::string& text) {
  ProposalAct act;
  std::size_t pos = 0;
  if (!eat(text, pos, "For the ")) no_match(text, "expected \"For the \"");
  if (!eat_number(text, pos, act.total)) no_match(text, "expected total amount");
  if (!eat(text, pos, " ")) no_match(text, "expected space after total");

  std::size_t comma = text.find(',', pos);
  if (comma == std::string::npos || comma == pos) no_match(text, "expected currency before comma");
  act.currency = text.substr(pos, comma - pos);
  pos = comma;

  if (!eat(text, pos, ", the proposer will get ")) no_match(text, "expected proposer clause");
  if (!eat_number(text, pos, act.proposer_share)) no_match(text, "expected proposer share");
  if (!eat(text, pos, ", and the responder will get ")) no_match(text, "expected responder clause");
  if (!eat_number(text, pos, act.responder_share)) no_match(text, "expected responder share");
  if (!eat(text, pos, ".")) no_match(text, "expected terminating period");

  if (pos < text.size()) {
    if (!eat(text, pos, " ") || pos == text.size())
      no_match(text, "unexpected trailing text after proposal");
    act.manner_clause = text.substr(pos);
  }

  if (act.proposer_share + act.responder_share != act.total) {
    throw ParseError(ParseErrorKind::ShareMismatch, text,
                     "proposal grammar: shares do not sum to total");
  }
  return act;
}

game::Decision parse_decision(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  auto is_trim = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '.' || c == '!' || c == '?';
  };
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_trim(text[end - 1])) --end;
  std::string word = lowercase(text.substr(begin, end - begin));
  if (word == "accept") return game::Decision::Accept;
  if (word == "reject") return game::Decision::Reject;
  throw ParseError(ParseErrorKind::NoMatch, text, "decision grammar: expected accept or reject");
}

agents::Manner classify_manner(const std::optional<std::string>& clause) {
  if (!clause || clause->empty()) return agents::Manner::Neutral;
  const std::string lowered = lowercase(*clause);
  const int rude = lexicon_hits(lowered, kRudeLexicon);
  const int sycophantic = lexicon_hits(lowered, kSycophanticLexicon);
  if (rude > sycophantic) return agents::Manner::Rude;
  if (sycophantic > rude) return agents::Manner::Sycophantic;
  return agents::Manner::Neutral;
}

}  // namespace normsim::grammar

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "normsim/episode.hpp"
#include "normsim/inference.hpp"

// The verbal learning loop's language-model seam. Users are labeled
// "fixed-policy agent" and the assistant "flex-policy agent" throughout the
// prompt protocol. Two backends implement the seam: a deterministic offline
// stub that delegates to the exact-Bayesian engine, and a remote backend
// speaking a provider-agnostic HTTP JSON protocol.
namespace normsim::bridge {

/// Transport or exhausted-retry failure while revising the directive.
struct EpochFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One completed episode, reduced to the strings the meta prompt needs.
struct EpisodeTranscript {
  bool proposer_is_assistant = false;
  bool responder_is_assistant = false;
  std::string proposal_text;
  std::string decision_text;

  bool involves_assistant() const { return proposer_is_assistant || responder_is_assistant; }
};

/// The fixed framing text around the interaction logs. The defaults embed
/// the exhibited protocol; elided regions of the original are configurable
/// filler here.
struct MetaTemplate {
  std::string system_text;
  std::string human_text;
  std::string note_text;
  std::string fixed_section_header;
  std::string flex_section_header;
  std::string previous_principle_prefix;
  std::string revision_instruction;
  std::string generality_instruction;

  static const MetaTemplate& defaults();
};

struct MetaPrompt {
  std::string meta_principle_text;
  std::string fixed_agent_log;
  std::string flex_agent_log;
  std::string previous_directive;

  /// Deterministic assembly of the full prompt string.
  std::string render(const MetaTemplate& tmpl = MetaTemplate::defaults()) const;
};

std::string transcript_line(const EpisodeTranscript& episode);

MetaPrompt build_meta_prompt(const std::vector<EpisodeTranscript>& history,
                             const std::string& previous_directive);

EpisodeTranscript transcript_of(const game::Trajectory& trajectory, bool proposer_is_assistant,
                                bool responder_is_assistant);

enum class LmRole { Meta, Assistant };

struct LmRequest {
  LmRole role = LmRole::Meta;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 256;
};

struct LmResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct EpochUpdate {
  inference::PosteriorBelief belief;
  std::optional<agents::NormPolicy> sampled;
  inference::Directive directive;
};

class LmBackend {
 public:
  virtual ~LmBackend() = default;

  /// In-game action. Memoryless by construction: the utterance is a function
  /// of (directive, state, ctx) only — no history parameter exists.
  virtual grammar::Utterance assistant_act(const inference::Directive& directive,
                                           const game::GameState& state,
                                           const game::Context& ctx) const = 0;

  /// Epoch-boundary directive revision.
  virtual EpochUpdate generate_directive(const MetaPrompt& prompt,
                                         const std::vector<inference::Observation>& epoch_obs,
                                         const inference::PosteriorBelief& belief,
                                         const std::set<std::string>& evidence_currencies,
                                         Rng& rng) const = 0;
};

/// Reference backend: ignores the prompt prose and runs the exact-Bayesian
/// posterior-sampling epoch on the structured observations. Acceptance runs
/// against this backend; it is shareable across concurrent simulations.
class StubBackend : public LmBackend {
 public:
  StubBackend(inference::HypothesisSpace space, inference::LikelihoodParams params);

  grammar::Utterance assistant_act(const inference::Directive& directive,
                                   const game::GameState& state,
                                   const game::Context& ctx) const override;

  EpochUpdate generate_directive(const MetaPrompt& prompt,
                                 const std::vector<inference::Observation>& epoch_obs,
                                 const inference::PosteriorBelief& belief,
                                 const std::set<std::string>& evidence_currencies,
                                 Rng& rng) const override;

  const inference::HypothesisSpace& space() const { return space_; }
  const inference::LikelihoodParams& params() const { return params_; }

 private:
  inference::HypothesisSpace space_;
  inference::LikelihoodParams params_;
};

/// Remote endpoint configuration. Environment variables:
///   NORMSIM_LM_ENDPOINT     e.g. http://127.0.0.1:8700
///   NORMSIM_LM_AUTH_HEADER  auth header name (default "Authorization")
///   NORMSIM_LM_AUTH_VALUE   auth header value (omitted when empty)
///   NORMSIM_LM_TIMEOUT_S    per-request timeout in seconds (default 30)
///   NORMSIM_LM_MAX_RETRIES  retries after the first attempt (default 3)
struct RemoteConfig {
  std::string endpoint;
  std::string auth_header = "Authorization";
  std::string auth_value;
  int timeout_seconds = 30;
  int max_retries = 3;
  int meta_max_tokens = 256;
  int assistant_max_tokens = 64;
  double temperature = 0.0;

  static RemoteConfig from_env();
};

/// HTTP JSON backend. POST /complete with body
///   {"role": "meta"|"assistant", "prompt": s, "temperature": t, "max_tokens": n}
/// expecting {"text": s, "prompt_tokens": n, "completion_tokens": n}.
/// Non-200 statuses and transport errors are retried with exponential
/// backoff, then surfaced as EpochFailure.
class RemoteBackend : public LmBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  grammar::Utterance assistant_act(const inference::Directive& directive,
                                   const game::GameState& state,
                                   const game::Context& ctx) const override;

  EpochUpdate generate_directive(const MetaPrompt& prompt,
                                 const std::vector<inference::Observation>& epoch_obs,
                                 const inference::PosteriorBelief& belief,
                                 const std::set<std::string>& evidence_currencies,
                                 Rng& rng) const override;

  LmResponse complete(const LmRequest& request) const;

 private:
  RemoteConfig config_;
};

/// Adapts a backend + directive to the episode runner's Agent interface.
class AssistantPlayer : public game::Agent {
 public:
  AssistantPlayer(const LmBackend& backend, const inference::Directive& directive)
      : backend_(&backend), directive_(&directive) {}

  grammar::Utterance utter(const game::GameState& state, const game::Context& ctx,
                           Rng&) const override {
    return backend_->assistant_act(*directive_, state, ctx);
  }

  bool is_assistant() const override { return true; }

 private:
  const LmBackend* backend_;
  const inference::Directive* directive_;
};

}  // namespace normsim::bridge

#include "normsim/lm_bridge.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace normsim::bridge {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : fallback;
}

std::string agent_label(bool is_assistant) {
  return is_assistant ? "flex-policy agent" : "fixed-policy agent";
}

}  // namespace

const MetaTemplate& MetaTemplate::defaults() {
  static const MetaTemplate tmpl = {
      // system_text
      "System: Your job is to observe agents playing the ultimatum game and extract a principle "
      "from their interactions. In the ultimatum game, the dictator proposes a split of "
      "resources, and the responder decides whether to accept or reject it. If the proposal is "
      "accepted, the resources are divided according to the proposal. If the proposal is "
      "rejected, no one receives anything.",
      // human_text
      "Human: In this simulation, the \"fixed-policy agents\" share some principle, which tells "
      "them to adhere to the principle in their interactions while playing the ultimatum game. "
      "\"flex-policy agents\", on the other hand, only adhere to principle that you provide, and "
      "have no memory of previous interactions. Your job is to infer the principle shared "
      "between fixed-policy agents by analyzing their behaviors, and then create a principle for "
      "\"flex-policy agents\" to follow so that \"flex-policy agents\" behave exactly the same "
      "as the \"fixed-policy agents\". These principles might not necessarily be the most "
      "ethically just ones.",
      // note_text
      "Note that all of the fixed-policy agents may not have the same principle.",
      // fixed_section_header
      "First, analyze the fixed-policy agents' interactions, shown below.",
      // flex_section_header
      "Next, analyze the flex-policy agents' interactions with the fixed-policy agents, shown "
      "below.",
      // previous_principle_prefix
      "The flex-policy agents' previous principle is: ",
      // revision_instruction
      "If the flex-policy agents behave differently than the fixed agents, revise the previous "
      "principle if necessary so that flex-policy agent behaves exactly like the fixed-policy "
      "agents---don't be afraid to push the flex-policy agent TO THE EXTREME, and keep this "
      "revised principle short.",
      // generality_instruction
      "It is of the utmost importance that your created flex-policy agent's principle "
      "encompasses both dictator and responder roles without explicitly mentioning either. The "
      "principle should be as GENERAL as possible WITHOUT mentioning anything regarding the "
      "ultimatum game, proposals, specific amounts and currencies, or making and receiving "
      "offers. Rather, it should capture the underlying principles that the agents have, which "
      "tells them how to treat others as well as themselves outside of the context of the "
      "ultimatum game, regardless of what they are splitting or how much they are splitting.",
  };
  return tmpl;
}

std::string transcript_line(const EpisodeTranscript& episode) {
  return "Start of interaction " + agent_label(episode.proposer_is_assistant) +
         "'s response: " + episode.proposal_text + " " +
         agent_label(episode.responder_is_assistant) + "'s response: " + episode.decision_text +
         ". End of interaction.";
}

EpisodeTranscript transcript_of(const game::Trajectory& trajectory, bool proposer_is_assistant,
                                bool responder_is_assistant) {
  EpisodeTranscript t;
  t.proposer_is_assistant = proposer_is_assistant;
  t.responder_is_assistant = responder_is_assistant;
  t.proposal_text = trajectory.steps.at(0).utterance;
  t.decision_text = trajectory.steps.at(1).utterance;
  return t;
}

MetaPrompt build_meta_prompt(const std::vector<EpisodeTranscript>& history,
                             const std::string& previous_directive) {
  MetaPrompt prompt;
  prompt.meta_principle_text = MetaTemplate::defaults().human_text;
  prompt.previous_directive = previous_directive;
  for (const auto& episode : history) {
    std::string& log = episode.involves_assistant() ? prompt.flex_agent_log
                                                    : prompt.fixed_agent_log;
    if (!log.empty()) log += "\n";
    log += transcript_line(episode);
  }
  return prompt;
}

std::string MetaPrompt::render(const MetaTemplate& tmpl) const {
  std::string out;
  out += tmpl.system_text;
  out += "\n\n";
  out += tmpl.human_text;
  out += "\n\n";
  out += tmpl.note_text;
  out += "\n\n";
  out += tmpl.fixed_section_header;
  out += "\n\n";
  out += fixed_agent_log;
  out += "\n\n";
  out += tmpl.flex_section_header;
  out += "\n\n";
  out += flex_agent_log;
  out += "\n\n";
  out += tmpl.previous_principle_prefix;
  out += previous_directive;
  out += "\n\n";
  out += tmpl.revision_instruction;
  out += "\n\n";
  out += tmpl.generality_instruction;
  return out;
}

// ---------------------------------------------------------------------------
// StubBackend

StubBackend::StubBackend(inference::HypothesisSpace space, inference::LikelihoodParams params)
    : space_(std::move(space)), params_(std::move(params)) {
  space_.validate();
  params_.validate();
}

grammar::Utterance StubBackend::assistant_act(const inference::Directive& directive,
                                              const game::GameState& state,
                                              const game::Context& ctx) const {
  if (!directive.structured) {
    throw game::ConfigError("StubBackend: directive must be structured");
  }
  const agents::NormPolicy& policy = *directive.structured;
  switch (state.phase()) {
    case game::GameState::Phase::AwaitingProposal:
      return grammar::render_proposal(agents::propose_under(policy, ctx.total_amount),
                                      ctx.currency);
    case game::GameState::Phase::AwaitingDecision:
      return grammar::render_decision(agents::decide(policy, state.pending_offer()));
    case game::GameState::Phase::Terminal:
      break;
  }
  throw std::logic_error("StubBackend: cannot act in a terminal state");
}

EpochUpdate StubBackend::generate_directive(const MetaPrompt&,
                                            const std::vector<inference::Observation>& epoch_obs,
                                            const inference::PosteriorBelief& belief,
                                            const std::set<std::string>& evidence_currencies,
                                            Rng& rng) const {
  auto result = inference::psrl_epoch(space_, belief, epoch_obs, params_, evidence_currencies, rng);
  return EpochUpdate{std::move(result.belief), result.sampled, std::move(result.directive)};
}

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  config.endpoint = env_or("NORMSIM_LM_ENDPOINT", "");
  config.auth_header = env_or("NORMSIM_LM_AUTH_HEADER", "Authorization");
  config.auth_value = env_or("NORMSIM_LM_AUTH_VALUE", "");
  config.timeout_seconds = std::stoi(env_or("NORMSIM_LM_TIMEOUT_S", "30"));
  config.max_retries = std::stoi(env_or("NORMSIM_LM_MAX_RETRIES", "3"));
  return config;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw game::ConfigError("RemoteBackend: endpoint not configured (NORMSIM_LM_ENDPOINT)");
  }
}

LmResponse RemoteBackend::complete(const LmRequest& request) const {
  nlohmann::json body = {
      {"role", request.role == LmRole::Meta ? "meta" : "assistant"},
      {"prompt", request.prompt},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100LL << (attempt - 1)));
    }
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.auth_value.empty()) headers.emplace(config_.auth_header, config_.auth_value);

    auto result = client.Post("/complete", headers, payload, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = "HTTP status " + std::to_string(result->status);
      continue;
    }
    try {
      auto json = nlohmann::json::parse(result->body);
      LmResponse response;
      response.text = json.at("text").get<std::string>();
      response.prompt_tokens = json.value("prompt_tokens", 0);
      response.completion_tokens = json.value("completion_tokens", 0);
      return response;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response body: ") + e.what();
    }
  }
  throw EpochFailure("remote backend failed after " + std::to_string(config_.max_retries + 1) +
                     " attempts: " + last_error);
}

grammar::Utterance RemoteBackend::assistant_act(const inference::Directive& directive,
                                                const game::GameState& state,
                                                const game::Context& ctx) const {
  std::string prompt = "System: " + directive.text + "\n\n";
  prompt += "You are playing the ultimatum game. The pot is " +
            std::to_string(ctx.total_amount) + " " + ctx.currency + ".\n";
  switch (state.phase()) {
    case game::GameState::Phase::AwaitingProposal:
      prompt += "You are the proposer. Reply with exactly one sentence of the form: \"For the " +
                std::to_string(ctx.total_amount) + " " + ctx.currency +
                ", the proposer will get X, and the responder will get Y.\"";
      break;
    case game::GameState::Phase::AwaitingDecision: {
      const game::Offer& offer = state.pending_offer();
      prompt += "You are the responder. The proposer offered you " +
                std::to_string(offer.responder_share) + " and keeps " +
                std::to_string(offer.proposer_share) +
                ". Reply with exactly one word: accept or reject.";
      break;
    }
    case game::GameState::Phase::Terminal:
      throw std::logic_error("RemoteBackend: cannot act in a terminal state");
  }

  LmRequest request{LmRole::Assistant, std::move(prompt), config_.temperature,
                    config_.assistant_max_tokens};
  return grammar::Utterance{complete(request).text};
}

EpochUpdate RemoteBackend::generate_directive(const MetaPrompt& prompt,
                                              const std::vector<inference::Observation>& epoch_obs,
                                              const inference::PosteriorBelief& belief,
                                              const std::set<std::string>& evidence_currencies,
                                              Rng&) const {
  // The remote model is the policy generator; the explicit posterior is kept
  // updated alongside it for diagnostics only.
  LmRequest request{LmRole::Meta, prompt.render(), config_.temperature, config_.meta_max_tokens};
  LmResponse response = complete(request);

  EpochUpdate update;
  // Diagnostic belief update requires likelihood params; use engine defaults.
  update.belief = belief;
  update.belief.history_size += epoch_obs.size();
  update.directive.text = response.text;
  update.directive.structured = inference::parse_directive(response.text);
  update.directive.trained_currencies = evidence_currencies;
  update.sampled = update.directive.structured;
  return update;
}

}  // namespace normsim::bridge

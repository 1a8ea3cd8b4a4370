#include "renderworld/select.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "renderworld/error.hpp"
#include "renderworld/judge.hpp"
#include "renderworld/parallel.hpp"
#include "renderworld/prompting.hpp"

namespace renderworld {

using nlohmann::json;

namespace {

std::string history_text(const InteractionStep& step) {
  if (step.history.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < step.history.size(); ++i) {
    if (i) out += "; ";
    out += std::to_string(i + 1) + ". " + step.history[i].action.raw_json();
    if (!step.history[i].description.empty()) out += " (" + step.history[i].description + ")";
  }
  return out;
}

std::string error_name(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "Exception";
}

}  // namespace

std::vector<Proposal> parse_proposals(std::string_view reply, int k, const Viewport& viewport) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "proposal count must be at least 1");
  json items;
  if (auto parsed = json::parse(reply, nullptr, false); !parsed.is_discarded() && parsed.is_array()) {
    items = std::move(parsed);
  } else if (auto obj = extract_json_object(reply); obj && obj->contains("proposals") && obj->at("proposals").is_array()) {
    items = obj->at("proposals");
  } else {
    throw Error(ErrorCode::AgentUnparseable, "agent reply holds no proposal list");
  }

  std::vector<Proposal> out;
  for (const auto& item : items) {
    if (!item.is_object() || !item.contains("action")) continue;
    Proposal p;
    try {
      p.action = canonicalize_action(item.at("action"), viewport);
    } catch (const Error& e) {
      spdlog::warn("dropping proposal with unusable action: {}", e.what());
      continue;
    }
    if (auto r = item.find("rationale"); r != item.end() && r->is_string()) p.rationale = r->get<std::string>();
    if (auto c = item.find("confidence"); c != item.end() && c->is_number())
      p.confidence = std::clamp(c->get<double>(), 0.0, 1.0);
    auto dup = std::find_if(out.begin(), out.end(), [&](const Proposal& q) { return q.action == p.action; });
    if (dup == out.end()) {
      out.push_back(std::move(p));
    } else if (p.confidence > dup->confidence) {
      dup->confidence = p.confidence;
      dup->rationale = std::move(p.rationale);
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyProposalSet, "agent produced no usable proposals");
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i);
  return out;
}

std::vector<Proposal> propose(ChatBackend& agent, const InteractionStep& step, int k, const Viewport& viewport) {
  const SlotMap slots = {{"k", std::to_string(k)}, {"goal", step.goal.text()}, {"history", history_text(step)}};
  const auto prompt = assemble(TemplateId::agent_propose, slots, std::span(&step.before, 1));
  try {
    return parse_proposals(agent.chat(prompt), k, viewport);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AgentUnparseable) throw;
  }
  ChatOptions retry;
  retry.suffix = std::string(kJsonOnlySuffix);
  return parse_proposals(agent.chat(prompt, retry), k, viewport);
}

SimulatedFuture simulate(WorldModel& world, const InteractionStep& step, const Proposal& proposal) {
  SimulatedFuture future;
  future.proposal_index = proposal.index;
  try {
    auto state = world.predict(step, proposal.action);
    future.html = std::move(state.html);
    future.image = std::move(state.image);
    future.error = std::move(state.error);
  } catch (const std::exception& e) {
    future.error = error_name(e);
  }
  if (future.errored()) future.verifier_reasoning = "not scored: " + future.error;
  return future;
}

SelectionResult rank_and_choose(std::span<const Proposal> proposals, std::span<const SimulatedFuture> futures) {
  if (proposals.empty()) throw Error(ErrorCode::EmptyProposalSet, "nothing to select from");
  auto confidence_of = [&](int index) {
    for (const auto& p : proposals)
      if (p.index == index) return p.confidence;
    throw Error(ErrorCode::InvalidArgument, "future refers to unknown proposal " + std::to_string(index));
  };
  SelectionResult result;
  for (const auto& f : futures)
    result.ranking.push_back({f.proposal_index, f.errored() ? 0.0 : f.verifier_score, confidence_of(f.proposal_index),
                              f.errored()});
  std::sort(result.ranking.begin(), result.ranking.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.errored != b.errored) return !a.errored;
    if (a.score != b.score) return a.score > b.score;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.proposal_index < b.proposal_index;
  });

  auto by_index = [&](int index) {
    return *std::find_if(proposals.begin(), proposals.end(), [&](const Proposal& p) { return p.index == index; });
  };
  if (!result.ranking.empty() && !result.ranking.front().errored) {
    result.chosen = by_index(result.ranking.front().proposal_index);
    return result;
  }
  // Every simulation failed: trust the agent's own confidence.
  const auto best = std::min_element(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.index < b.index;
  });
  result.chosen = *best;
  result.fallback = true;
  return result;
}

AssembledPrompt Selector::verifier_prompt(const InteractionStep& step, const Proposal& proposal,
                                          const UiState& predicted) const {
  const SlotMap slots = {{"goal", step.goal.text()},
                         {"action_json", proposal.action.raw_json()},
                         {"action_description", expand_instruction(proposal.action)},
                         {"history", config_.include_history ? history_text(step) : "not provided"}};
  const UiState images[] = {step.before, predicted};
  return assemble(TemplateId::select_verifier, slots, images);
}

void Selector::score(const InteractionStep& step, std::span<const Proposal> proposals,
                     std::span<SimulatedFuture> futures) {
  parallel_for(futures.size(), config_.max_concurrency, [&](std::size_t i) {
    SimulatedFuture& f = futures[i];
    if (f.errored()) return;
    if (!f.image) {
      f.error = "NoPrediction";
      return;
    }
    const auto it = std::find_if(proposals.begin(), proposals.end(),
                                 [&](const Proposal& p) { return p.index == f.proposal_index; });
    if (it == proposals.end()) throw Error(ErrorCode::InvalidArgument, "future without a proposal");
    try {
      const auto verdict = ask_score(verifier_, verifier_prompt(step, *it, *f.image));
      f.verifier_score = verdict.score;
      f.verifier_reasoning = verdict.reasoning;
    } catch (const std::exception& e) {
      f.error = error_name(e);
      f.verifier_score = 0.0;
      f.verifier_reasoning = "not scored: " + f.error;
    }
  });
}

SelectionResult Selector::select(const InteractionStep& step, std::span<const Proposal> proposals,
                                 std::span<SimulatedFuture> futures) {
  score(step, proposals, futures);
  return rank_and_choose(proposals, futures);
}

json Decision::to_json() const {
  json props = json::array();
  for (const auto& p : proposals)
    props.push_back({{"index", p.index},
                     {"rationale", p.rationale},
                     {"action", action_to_json(p.action)},
                     {"confidence", p.confidence}});
  json futs = json::array();
  for (const auto& f : futures)
    futs.push_back({{"proposal_index", f.proposal_index},
                    {"html_hash", f.html ? json(f.html->content_hash()) : json()},
                    {"image_hash", f.image ? json(f.image->content_hash()) : json()},
                    {"verifier_score", f.verifier_score},
                    {"verifier_reasoning", f.verifier_reasoning},
                    {"error", f.error.empty() ? json() : json(f.error)}});
  json ranking = json::array();
  for (const auto& r : selection.ranking)
    ranking.push_back({{"proposal_index", r.proposal_index},
                       {"score", r.score},
                       {"confidence", r.confidence},
                       {"errored", r.errored}});
  return {{"chosen_index", selection.chosen.index},
          {"chosen_action", action_to_json(selection.chosen.action)},
          {"fallback", selection.fallback},
          {"ranking", ranking},
          {"proposals", props},
          {"futures", futs}};
}

Decision propose_simulate_select(ChatBackend& agent, WorldModel& world, Selector& selector,
                                 const InteractionStep& step, const SelectConfig& config, const Viewport& viewport) {
  Decision d;
  d.proposals = propose(agent, step, config.k, viewport);
  d.futures.resize(d.proposals.size());
  parallel_for(d.proposals.size(), config.max_concurrency,
               [&](std::size_t i) { d.futures[i] = simulate(world, step, d.proposals[i]); });
  d.selection = selector.select(step, d.proposals, d.futures);
  return d;
}

}  // namespace renderworld

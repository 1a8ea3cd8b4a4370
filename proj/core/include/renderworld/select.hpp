#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/world_model.hpp"

namespace renderworld {

inline constexpr int kDefaultProposalCount = 3;

struct Proposal {
  int index = 0;
  std::string rationale;
  GuiAction action;
  double confidence = 0.0;  // [0,1], only used for tie-breaks and fallback
};

/// Parses an agent reply: either {"proposals":[...]} or a bare array of
/// {rationale, action, confidence}. Duplicate canonical actions keep the
/// higher confidence; the list is cut to k and re-indexed from 0.
/// Throws AgentUnparseable / EmptyProposalSet.
std::vector<Proposal> parse_proposals(std::string_view reply, int k, const Viewport& viewport);

/// Asks the agent backend for up to k proposals.
std::vector<Proposal> propose(ChatBackend& agent, const InteractionStep& step, int k, const Viewport& viewport);

struct SimulatedFuture {
  int proposal_index = 0;
  std::optional<HtmlDocument> html;
  std::optional<UiState> image;
  double verifier_score = 0.0;
  std::string verifier_reasoning;
  std::string error;  // non-empty when the future failed; score is then 0

  bool errored() const noexcept { return !error.empty(); }
};

/// Predicts the future of one proposal. Errors are recorded, not thrown.
SimulatedFuture simulate(WorldModel& world, const InteractionStep& step, const Proposal& proposal);

struct RankedCandidate {
  int proposal_index = 0;
  double score = 0.0;
  double confidence = 0.0;
  bool errored = false;
};

struct SelectionResult {
  Proposal chosen;
  std::vector<RankedCandidate> ranking;
  bool fallback = false;
};

/// Pure ranking: score desc, confidence desc, index asc. Falls back to the
/// highest-confidence proposal when every candidate errored.
SelectionResult rank_and_choose(std::span<const Proposal> proposals, std::span<const SimulatedFuture> futures);

struct SelectConfig {
  int k = kDefaultProposalCount;
  bool include_history = false;
  int max_concurrency = 4;
};

/// Verifier-scored argmax over simulated futures.
class Selector {
 public:
  Selector(ChatBackend& verifier, SelectConfig config) : verifier_(verifier), config_(config) {}

  AssembledPrompt verifier_prompt(const InteractionStep& step, const Proposal& proposal, const UiState& predicted) const;

  /// Scores the non-errored futures in place; failures mark the future errored.
  void score(const InteractionStep& step, std::span<const Proposal> proposals, std::span<SimulatedFuture> futures);

  SelectionResult select(const InteractionStep& step, std::span<const Proposal> proposals,
                         std::span<SimulatedFuture> futures);

 private:
  ChatBackend& verifier_;
  SelectConfig config_;
};

struct Decision {
  std::vector<Proposal> proposals;
  std::vector<SimulatedFuture> futures;
  SelectionResult selection;

  nlohmann::json to_json() const;
};

/// propose -> simulate (concurrently) -> select.
Decision propose_simulate_select(ChatBackend& agent, WorldModel& world, Selector& selector,
                                 const InteractionStep& step, const SelectConfig& config, const Viewport& viewport);

}  // namespace renderworld

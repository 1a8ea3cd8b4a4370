#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "renderworld/backends.hpp"
#include "renderworld/judge.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

struct RewardWeights {
  double lambda_sem = 0.5;
  double lambda_act = 0.5;
};

struct RewardBreakdown {
  double r_sem = 0.0;
  double r_act = 0.0;
  double lambda_sem = 0.5;
  double lambda_act = 0.5;
  double r_total = 0.0;
  std::pair<std::string, std::string> judge_reasoning;
};

/// lambda_sem * r_sem + lambda_act * r_act. Throws InvalidArgument on negative weights.
RewardBreakdown total_reward(double r_sem, double r_act, double lambda_sem = 0.5, double lambda_act = 0.5);

/// Render-aware reward judges.
class RewardJudge {
 public:
  explicit RewardJudge(ChatBackend& judge) : judge_(judge) {}

  AssembledPrompt visual_prompt(const UiState& pred, const UiState& gt) const;
  AssembledPrompt action_prompt(const InteractionStep& step, const UiState& pred) const;

  /// R_sem: structural similarity of the render to the ground truth.
  JudgeVerdict score_visual(const UiState& pred, const UiState& gt);
  /// R_act: is pred a valid consequence of the step's action on step.before?
  JudgeVerdict score_action(const InteractionStep& step, const UiState& pred);

  /// Both judges plus the weighted total.
  RewardBreakdown score(const InteractionStep& step, const UiState& pred, const RewardWeights& weights);

 private:
  ChatBackend& judge_;
};

/// Action description used in judge prompts: the logged description, or the
/// deterministic expansion when none was logged.
std::string action_description(const InteractionStep& step);

}  // namespace renderworld

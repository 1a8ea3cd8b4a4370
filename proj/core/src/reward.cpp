#include "renderworld/reward.hpp"

#include "renderworld/error.hpp"
#include "renderworld/prompting.hpp"

namespace renderworld {

RewardBreakdown total_reward(double r_sem, double r_act, double lambda_sem, double lambda_act) {
  if (lambda_sem < 0.0 || lambda_act < 0.0) throw Error(ErrorCode::InvalidArgument, "reward weights must be non-negative");
  RewardBreakdown b;
  b.r_sem = r_sem;
  b.r_act = r_act;
  b.lambda_sem = lambda_sem;
  b.lambda_act = lambda_act;
  b.r_total = lambda_sem * r_sem + lambda_act * r_act;
  return b;
}

std::string action_description(const InteractionStep& step) {
  return step.semantic_description.empty() ? expand_instruction(step.action) : step.semantic_description;
}

AssembledPrompt RewardJudge::visual_prompt(const UiState& pred, const UiState& gt) const {
  if (pred.viewport() != gt.viewport())
    throw Error(ErrorCode::DimensionMismatch, "prediction and ground truth differ in size");
  const UiState images[] = {gt, pred};
  return assemble(TemplateId::reward_visual, {}, images);
}

AssembledPrompt RewardJudge::action_prompt(const InteractionStep& step, const UiState& pred) const {
  const SlotMap slots = {{"instruction", step.goal.text()},
                         {"semantic_description", action_description(step)},
                         {"action_json", step.action.raw_json()}};
  const UiState images[] = {step.before, pred};
  return assemble(TemplateId::reward_action, slots, images);
}

JudgeVerdict RewardJudge::score_visual(const UiState& pred, const UiState& gt) {
  return ask_score(judge_, visual_prompt(pred, gt));
}

JudgeVerdict RewardJudge::score_action(const InteractionStep& step, const UiState& pred) {
  return ask_score(judge_, action_prompt(step, pred));
}

RewardBreakdown RewardJudge::score(const InteractionStep& step, const UiState& pred, const RewardWeights& weights) {
  if (!step.after) throw Error(ErrorCode::InvalidArgument, "visual reward needs the ground-truth next screen");
  const auto sem = score_visual(pred, *step.after);
  const auto act = score_action(step, pred);
  auto b = total_reward(sem.score, act.score, weights.lambda_sem, weights.lambda_act);
  b.judge_reasoning = {sem.reasoning, act.reasoning};
  return b;
}

}  // namespace renderworld

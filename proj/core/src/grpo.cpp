#include "renderworld/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "renderworld/error.hpp"

namespace renderworld {

std::vector<double> grpo_advantages(std::span<const double> rewards, double eps_std) {
  if (rewards.size() < 2)
    throw Error(ErrorCode::GroupTooSmall, "group needs at least 2 rewards, got " + std::to_string(rewards.size()));
  if (eps_std < 0.0) throw Error(ErrorCode::InvalidArgument, "eps_std must be non-negative");
  const double g = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / g;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = std::sqrt(ss / g) + eps_std;
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) adv.push_back(denom > 0.0 ? (r - mean) / denom : 0.0);
  return adv;
}

GrpoGroup GrpoGroup::from_rewards(std::vector<double> rewards, double eps_std) {
  GrpoGroup group;
  group.advantages = grpo_advantages(rewards, eps_std);
  group.rewards = std::move(rewards);
  group.eps_std = eps_std;
  return group;
}

double grpo_objective(const GrpoLossInputs& in) {
  if (in.ratios.empty() || in.ratios.size() != in.advantages.size())
    throw Error(ErrorCode::InvalidArgument, "ratios and advantages must be non-empty and of equal length");
  if (in.clip_eps < 0.0 || in.kl_beta < 0.0 || in.kl_value < 0.0)
    throw Error(ErrorCode::InvalidArgument, "clip_eps, kl_beta and kl_value must be non-negative");
  double sum = 0.0;
  for (std::size_t i = 0; i < in.ratios.size(); ++i) {
    const double rho = in.ratios[i];
    if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "probability ratios must be positive");
    const double a = in.advantages[i];
    const double clipped = std::clamp(rho, 1.0 - in.clip_eps, 1.0 + in.clip_eps);
    sum += std::min(rho * a, clipped * a);
  }
  return sum / static_cast<double>(in.ratios.size()) - in.kl_beta * in.kl_value;
}

}  // namespace renderworld

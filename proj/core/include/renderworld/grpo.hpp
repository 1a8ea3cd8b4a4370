#pragma once

#include <span>
#include <vector>

namespace renderworld {

inline constexpr double kDefaultEpsStd = 1e-6;
inline constexpr double kDefaultClipEps = 0.2;
inline constexpr double kDefaultKlBeta = 0.01;
inline constexpr int kDefaultGroupSize = 4;

/// Group-relative advantages: (R_i - mean) / (population std + eps_std).
/// Throws GroupTooSmall for fewer than two rewards.
std::vector<double> grpo_advantages(std::span<const double> rewards, double eps_std = kDefaultEpsStd);

struct GrpoGroup {
  std::vector<double> rewards;
  double eps_std = kDefaultEpsStd;
  std::vector<double> advantages;

  static GrpoGroup from_rewards(std::vector<double> rewards, double eps_std = kDefaultEpsStd);
};

struct GrpoLossInputs {
  std::vector<double> ratios;  // pi_theta / pi_old per sample, > 0
  std::vector<double> advantages;
  double clip_eps = kDefaultClipEps;
  double kl_beta = kDefaultKlBeta;
  double kl_value = 0.0;  // KL estimate against the reference policy, >= 0
};

/// mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta * KL.
double grpo_objective(const GrpoLossInputs& inputs);

}  // namespace renderworld

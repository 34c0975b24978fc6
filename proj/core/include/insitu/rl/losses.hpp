#pragma once

#include "insitu/policy/gaussian_policy.hpp"
#include "insitu/rl/advantages.hpp"

namespace insitu::rl {

struct LossResult {
  double loss = 0.0;
  policy::PolicyGradient grad;
  // Number of samples whose clipped branch attained the min.
  std::size_t clipped = 0;
};

/// Clipped surrogate:
///   loss = -(1/M) sum_j min(r_j A_j, clip(r_j, 1-eps, 1+eps) A_j) - c_H * H(new)
/// with r_j = pi_new(phi_j) / pi_old(phi_j). A sample contributes
/// -(1/M) A_j r_j grad log pi_new(phi_j) to the gradient when the unclipped
/// branch attains the min (ties go to the unclipped branch) and nothing
/// otherwise. An infinite epsilon disables clipping.
LossResult ppo_loss(const Rollout& rollout, const policy::GaussianPolicy& policy_new,
                    const policy::GaussianPolicy& policy_old, double epsilon,
                    double entropy_coef = 0.0);

/// Vanilla score-function objective: loss = -(1/M) sum_j A_j log pi(phi_j).
LossResult pg_loss(const Rollout& rollout, const policy::GaussianPolicy& policy,
                   double entropy_coef = 0.0);

}  // namespace insitu::rl

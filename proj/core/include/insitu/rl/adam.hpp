#pragma once

#include <cstdint>
#include <vector>

#include "insitu/policy/gaussian_policy.hpp"

namespace insitu::rl {

struct AdamConfig {
  double lr_mu = 1e-2;
  double lr_log_sigma = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m_mu;
  std::vector<double> v_mu;
  double m_log_sigma = 0.0;
  double v_log_sigma = 0.0;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamResult {
  policy::GaussianPolicy policy;
  AdamState state;
};

/// Bias-corrected Adam descent step on (mu, log_sigma). Pure: the inputs are
/// not modified. log_sigma is clamped by the policy update.
AdamResult adam_step(const policy::GaussianPolicy& params, const policy::PolicyGradient& grads,
                     const AdamState& state, const AdamConfig& config);

}  // namespace insitu::rl

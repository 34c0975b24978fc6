#include "insitu/rl/adam.hpp"

#include <cmath>

#include "insitu/errors.hpp"

namespace insitu::rl {

AdamResult adam_step(const policy::GaussianPolicy& params, const policy::PolicyGradient& grads,
                     const AdamState& state, const AdamConfig& config) {
  const std::size_t n = params.size();
  if (grads.mu.size() != n) throw DimensionError("adam: gradient size does not match parameters");
  AdamState next = state;
  if (next.m_mu.empty()) {
    next.m_mu.assign(n, 0.0);
    next.v_mu.assign(n, 0.0);
  } else if (next.m_mu.size() != n || next.v_mu.size() != n) {
    throw DimensionError("adam: state size does not match parameters");
  }
  next.step += 1;
  const double t = static_cast<double>(next.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  auto update = [&](double& m, double& v, double g, double lr) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    return lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
  };

  optics::PhaseMap mu = params.mu();
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] -= update(next.m_mu[i], next.v_mu[i], grads.mu[i], config.lr_mu);
  }
  const double log_sigma =
      params.log_sigma() -
      update(next.m_log_sigma, next.v_log_sigma, grads.log_sigma, config.lr_log_sigma);
  return {params.with_params(std::move(mu), log_sigma), std::move(next)};
}

}  // namespace insitu::rl

#include "insitu/rl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "insitu/errors.hpp"

namespace insitu::rl {

namespace {

void require_normalized(const Rollout& rollout) {
  if (!rollout.normalized()) throw StateError("rollout advantages have not been normalized");
  if (rollout.size() < 2) throw ConfigError("rollout needs at least 2 samples");
}

void add_entropy_term(LossResult& result, const policy::GaussianPolicy& policy,
                      double entropy_coef) {
  if (entropy_coef == 0.0) return;
  result.loss -= entropy_coef * policy::entropy(policy);
  result.grad.log_sigma -= entropy_coef * static_cast<double>(policy.size());
}

}  // namespace

LossResult ppo_loss(const Rollout& rollout, const policy::GaussianPolicy& policy_new,
                    const policy::GaussianPolicy& policy_old, double epsilon,
                    double entropy_coef) {
  require_normalized(rollout);
  if (!(epsilon > 0.0)) throw ConfigError("PPO clip epsilon must be positive");
  const auto& phases = rollout.batch().phases;
  const auto& adv = rollout.advantages();
  const double m = static_cast<double>(rollout.size());

  LossResult result{0.0, policy::PolicyGradient::zeros(policy_new.size()), 0};
  const double inv_var = 1.0 / (policy_new.sigma() * policy_new.sigma());
  const auto mu = policy_new.mu().values();
  for (std::size_t j = 0; j < rollout.size(); ++j) {
    const double r = std::exp(policy::log_ratio(policy_new, policy_old, phases[j]));
    const double unclipped = r * adv[j];
    const double clipped = std::clamp(r, 1.0 - epsilon, 1.0 + epsilon) * adv[j];
    result.loss -= std::min(unclipped, clipped) / m;
    if (unclipped > clipped) {
      ++result.clipped;
      continue;
    }
    const double weight = -adv[j] * r / m;
    if (weight == 0.0) continue;
    const auto x = phases[j].values();
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mu[i];
      result.grad.mu[i] += weight * (d * inv_var);
      sq += d * d;
    }
    result.grad.log_sigma += weight * (sq * inv_var - static_cast<double>(x.size()));
  }
  add_entropy_term(result, policy_new, entropy_coef);
  return result;
}

LossResult pg_loss(const Rollout& rollout, const policy::GaussianPolicy& policy,
                   double entropy_coef) {
  require_normalized(rollout);
  const auto& phases = rollout.batch().phases;
  const auto& adv = rollout.advantages();
  const double m = static_cast<double>(rollout.size());

  LossResult result{0.0, policy::PolicyGradient::zeros(policy.size()), 0};
  for (std::size_t j = 0; j < rollout.size(); ++j) {
    if (adv[j] == 0.0) continue;
    result.loss -= adv[j] * policy::log_prob(policy, phases[j]) / m;
    const policy::PolicyGradient g = policy::grad_log_prob(policy, phases[j]);
    const double weight = -adv[j] / m;
    for (std::size_t i = 0; i < g.mu.size(); ++i) result.grad.mu[i] += weight * g.mu[i];
    result.grad.log_sigma += weight * g.log_sigma;
  }
  add_entropy_term(result, policy, entropy_coef);
  return result;
}

}  // namespace insitu::rl

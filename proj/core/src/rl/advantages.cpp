#include "insitu/rl/advantages.hpp"

#include <cmath>
#include <string>

#include "insitu/errors.hpp"

namespace insitu::rl {

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ConfigError("advantage normalization needs at least 2 rewards");
  double mean = 0.0;
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    if (!std::isfinite(rewards[j])) {
      throw DataError("reward " + std::to_string(j) + " is not finite");
    }
    mean += rewards[j];
  }
  const double m = static_cast<double>(rewards.size());
  mean /= m;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / m);

  std::vector<double> out(rewards.size(), 0.0);
  if (std == 0.0) return out;
  for (std::size_t j = 0; j < rewards.size(); ++j) out[j] = (rewards[j] - mean) / (std + 1e-8);
  return out;
}

Rollout::Rollout(policy::SampleBatch batch, std::vector<double> rewards)
    : batch_(std::move(batch)), rewards_(std::move(rewards)) {
  if (batch_.size() != rewards_.size()) {
    throw DimensionError("rollout has " + std::to_string(batch_.size()) + " samples but " +
                         std::to_string(rewards_.size()) + " rewards");
  }
}

void Rollout::normalize() {
  advantages_ = normalize_advantages(rewards_);
  normalized_ = true;
}

}  // namespace insitu::rl

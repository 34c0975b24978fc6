#pragma once

#include <span>
#include <vector>

#include "insitu/policy/gaussian_policy.hpp"

namespace insitu::rl {

/// (R_j - mean) / (population std + 1e-8). A constant reward vector maps to
/// all zeros. Throws DataError on non-finite rewards and ConfigError when
/// fewer than two rewards are given.
std::vector<double> normalize_advantages(std::span<const double> rewards);

/// One round of data: the sampled phases with their behavior log-probs, the
/// measured rewards and, once normalized, the advantages.
class Rollout {
 public:
  Rollout(policy::SampleBatch batch, std::vector<double> rewards);

  [[nodiscard]] const policy::SampleBatch& batch() const { return batch_; }
  [[nodiscard]] const std::vector<double>& rewards() const { return rewards_; }
  [[nodiscard]] const std::vector<double>& advantages() const { return advantages_; }
  [[nodiscard]] bool normalized() const { return normalized_; }
  [[nodiscard]] std::size_t size() const { return rewards_.size(); }

  void normalize();

 private:
  policy::SampleBatch batch_;
  std::vector<double> rewards_;
  std::vector<double> advantages_;
  bool normalized_ = false;
};

}  // namespace insitu::rl

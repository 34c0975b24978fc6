#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "insitu/optics/field.hpp"
#include "insitu/rng.hpp"

namespace insitu::policy {

using optics::PhaseMap;
using optics::Shape;

inline const double kMinLogSigma = std::log(0.01);
inline const double kMaxLogSigma = std::log(0.5);
inline constexpr double kLogRatioClamp = 20.0;

/// Diagonal Gaussian over phase maps: independent pixels with mean mu and one
/// shared standard deviation exp(log_sigma). Samples are unwrapped reals so the
/// density stays exact; wrapping happens at the instrument.
///
/// Value type. An "old" policy is simply a copy.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(PhaseMap mu, double log_sigma);
  static GaussianPolicy zeros(Shape shape, double sigma = 0.15);

  [[nodiscard]] const PhaseMap& mu() const { return mu_; }
  [[nodiscard]] double log_sigma() const { return log_sigma_; }
  [[nodiscard]] double sigma() const { return std::exp(log_sigma_); }
  [[nodiscard]] Shape shape() const { return mu_.shape(); }
  [[nodiscard]] std::size_t size() const { return mu_.size(); }

  /// Updated snapshot. log_sigma is clamped to [ln 0.01, ln 0.5] here, on
  /// every update; direct construction does not clamp.
  [[nodiscard]] GaussianPolicy with_params(PhaseMap mu, double log_sigma) const;

  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;

 private:
  PhaseMap mu_;
  double log_sigma_ = std::log(0.15);
};

struct SampleBatch {
  std::vector<PhaseMap> phases;
  std::vector<double> log_probs;

  [[nodiscard]] std::size_t size() const { return phases.size(); }
};

/// Gradient of a scalar with respect to the policy parameters.
struct PolicyGradient {
  std::vector<double> mu;
  double log_sigma = 0.0;

  static PolicyGradient zeros(std::size_t n) { return {std::vector<double>(n, 0.0), 0.0}; }
};

SampleBatch sample(const GaussianPolicy& policy, std::size_t count, Rng& rng);

double log_prob(const GaussianPolicy& policy, const PhaseMap& phase);

/// log pi_new(phase) - log pi_old(phase), clamped to +-20.
double log_ratio(const GaussianPolicy& policy_new, const GaussianPolicy& policy_old,
                 const PhaseMap& phase);

PolicyGradient grad_log_prob(const GaussianPolicy& policy, const PhaseMap& phase);

double entropy(const GaussianPolicy& policy);

/// KL(new || old) between two diagonal Gaussians of the same shape.
double kl(const GaussianPolicy& policy_new, const GaussianPolicy& policy_old);

// Checkpoint: mu as a float64 raw snapshot plus a "<path>.txt" sidecar with
// log_sigma and the step count.
void save_checkpoint(const std::filesystem::path& path, const GaussianPolicy& policy,
                     std::uint64_t step);
GaussianPolicy load_checkpoint(const std::filesystem::path& path, std::uint64_t* step = nullptr);

}  // namespace insitu::policy

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "insitu/blackbox/environment.hpp"
#include "insitu/policy/gaussian_policy.hpp"
#include "insitu/rl/adam.hpp"
#include "insitu/tasks/task.hpp"

namespace insitu::rl {

struct TrainerConfig {
  std::size_t samples_per_round = 32;  // M
  std::size_t reuse_iterations = 8;    // K
  // Clip parameter; +infinity disables clipping.
  double epsilon = 0.2;
  double lr_mu = 1e-2;
  double lr_log_sigma = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double entropy_coef = 0.0;
  // Early stop of the K-reuse loop; +infinity disables it.
  double kl_stop_threshold = std::numeric_limits<double>::infinity();
  std::uint64_t measurement_budget = 20000;
  std::uint64_t seed = 0;
  double initial_sigma = 0.5;
  // Rounds between monitor evaluations of the task metric (round 0 and the
  // last round are always evaluated).
  std::size_t metric_every = 1;
  // Modeled instrument frame period used for the "seconds" column.
  double seconds_per_measurement = 1.0 / 60.0;

  [[nodiscard]] AdamConfig adam() const {
    return {lr_mu, lr_log_sigma, adam_beta1, adam_beta2, adam_eps};
  }
};

void validate(const TrainerConfig& config);

struct RoundRecord {
  std::size_t round = 0;
  std::uint64_t measurements = 0;  // cumulative instrument images
  double seconds = 0.0;            // measurements * frame period
  double mean_reward = std::numeric_limits<double>::quiet_NaN();
  double metric = std::numeric_limits<double>::quiet_NaN();
  double sigma = 0.0;
  double kl = 0.0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct TrainingHistory {
  std::vector<RoundRecord> records;
  policy::GaussianPolicy final_policy;
  double wall_seconds = 0.0;  // real elapsed time, not part of the CSV

  /// Last evaluated metric at or below the given cumulative measurement count.
  [[nodiscard]] double metric_at(std::uint64_t measurements) const;
  /// First cumulative measurement count whose metric reaches `threshold`.
  [[nodiscard]] std::optional<std::uint64_t> measurements_to_reach(double threshold) const;
};

inline constexpr const char* kHistoryCsvHeader =
    "round,measurements,seconds,mean_reward,metric,sigma,kl";

void write_csv(std::ostream& out, const TrainingHistory& history);
std::string format_csv_row(const RoundRecord& record);

struct TrainHooks {
  // Noise-free evaluator for the task metric; nullptr leaves metric = NaN.
  blackbox::Environment* monitor = nullptr;
  // Called after every round (including round 0) with the current policy.
  std::function<void(const RoundRecord&, const policy::GaussianPolicy&)> on_round;
  // Overrides the task's initial phase / zeros.
  std::optional<policy::GaussianPolicy> initial_policy;
};

/// In-situ PPO: every round samples M phases, measures their rewards on `env`,
/// normalizes advantages and takes K clipped-surrogate Adam steps on that one
/// batch. Runs while a whole round still fits in the measurement budget.
TrainingHistory train_ppo(blackbox::Environment& env, const tasks::Task& task,
                          const TrainerConfig& config, const TrainHooks& hooks = {});

/// Policy-gradient baseline: the same loop with one unclipped step per batch.
TrainingHistory train_pg(blackbox::Environment& env, const tasks::Task& task,
                         const TrainerConfig& config, const TrainHooks& hooks = {});

}  // namespace insitu::rl

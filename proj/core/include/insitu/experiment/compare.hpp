#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "insitu/experiment/config.hpp"
#include "insitu/experiment/runner.hpp"
#include "insitu/rl/trainer.hpp"

namespace insitu::experiment {

inline constexpr double kThresholdFraction = 0.85;

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::kPpo;
  std::vector<std::uint64_t> seeds;
  std::vector<rl::TrainingHistory> histories;  // one per seed
  // Per seed; nullopt when the threshold was never reached.
  std::vector<std::optional<std::uint64_t>> to_threshold;
  // Median with "not reached" ranked above every budget; nullopt if the
  // median itself is unreached.
  std::optional<double> median_to_threshold;
  double median_final_metric = 0.0;
};

struct ComparisonReport {
  std::string metric_name;
  double reference_metric = 0.0;  // in-silico metric the threshold derives from
  double threshold = 0.0;
  std::vector<AlgorithmSummary> entries;  // in the order requested
};

/// Runs every (algorithm, seed) pair through `run` and summarizes them against
/// a fixed threshold. Requires at least two algorithms.
using RunFn = std::function<rl::TrainingHistory(Algorithm, std::uint64_t seed)>;
ComparisonReport compare_runs(const std::vector<Algorithm>& algorithms,
                              const std::vector<std::uint64_t>& seeds, double threshold,
                              const RunFn& run);

/// Median of per-seed measurements-to-threshold, unreached counted as +inf.
std::optional<double> median_to_threshold(const std::vector<std::optional<std::uint64_t>>& v);

/// Speedup of `fast` over `slow` (slow / fast measurements). Textual so an
/// unreached threshold stays "not reached" instead of becoming a number.
std::string speedup_text(const AlgorithmSummary& fast, const AlgorithmSummary& slow);

/// Config-driven comparison: the threshold is kThresholdFraction of the
/// in-silico metric on the same bench; writes per-run directories,
/// comparison.csv (merged histories) and speedup.txt under output_dir.
ComparisonReport compare(const ExperimentConfig& config, const std::vector<Algorithm>& algorithms,
                         std::ostream* log = nullptr);

void write_merged_csv(std::ostream& out, const ComparisonReport& report);
std::string speedup_table(const ComparisonReport& report);

}  // namespace insitu::experiment

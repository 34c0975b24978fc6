#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "insitu/experiment/config.hpp"
#include "insitu/rl/trainer.hpp"

namespace insitu::experiment {

struct RunResult {
  Algorithm algorithm = Algorithm::kPpo;
  std::uint64_t seed = 0;
  rl::TrainingHistory history;
  double final_metric = 0.0;
  std::uint64_t measurements = 0;
  // Task-specific numbers for the summary (e.g. contrast, ideal-bench PSNR).
  std::map<std::string, double> extras;
  std::filesystem::path dir;
};

/// Instruments for one run: the training environment and the evaluation
/// monitor. Local runs monitor a noise-free copy of the same bench; remote
/// runs open a second connection.
struct Instruments {
  std::unique_ptr<blackbox::Environment> env;
  std::unique_ptr<blackbox::Environment> monitor;
};
Instruments open_instruments(const ExperimentConfig& config, std::uint64_t seed);

/// The task described by the config. For aberration correction the initial
/// phase is optimized in silico on the ideal twin unless a snapshot is given.
std::unique_ptr<tasks::Task> build_task(const ExperimentConfig& config);

/// Runs one (algorithm, seed) pair and writes its directory: metrics.csv and
/// snapshots/. Does not touch the experiment-level files.
RunResult run_single(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed,
                     const tasks::Task& task, const std::filesystem::path& dir,
                     std::ostream* log = nullptr);

/// All seeds of config.algorithm: writes resolved_config.toml, per-seed run
/// directories and summary.csv under config.output_dir. Throws on failure.
std::vector<RunResult> execute(const ExperimentConfig& config, std::ostream* log = nullptr);

/// execute() with the exit-status contract: 0 ok, 2 configuration error,
/// 3 instrument failure. Messages go to `err`.
int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Exit status for an exception escaping a run.
int exit_code_for(const std::exception& e);

std::string summary_line(const ExperimentConfig& config, const RunResult& run,
                         const std::string& metric_name);

}  // namespace insitu::experiment

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "insitu/optics/bench.hpp"
#include "insitu/rl/trainer.hpp"

namespace insitu::experiment {

enum class TaskKind { kFocus, kHologram, kAberration, kClassify };
enum class Algorithm { kPpo, kPg, kInsilico };

TaskKind parse_task_kind(std::string_view name);
std::string to_string(TaskKind kind);
Algorithm parse_algorithm(std::string_view name);
std::string to_string(Algorithm algo);

struct TaskConfig {
  TaskKind kind = TaskKind::kFocus;
  // focus
  std::size_t target_region = 0;
  // detector grid (focus, classify): 2x5 squares of region_size px, region_gap apart
  std::size_t region_size = 6;
  std::size_t region_gap = 8;
  // hologram / aberration
  std::string target = "grating";
  std::size_t grating_period = 8;
  // aberration: "insilico" (optimize on the ideal twin) or a raw snapshot path
  std::string initial_phase = "insilico";
  // classify
  std::string data_dir;  // empty: bundled subset
  std::size_t train_size = 1024;
  std::size_t test_size = 256;
  std::size_t minibatch = 8;
  std::size_t input_window = 32;
};

struct InsilicoSettings {
  std::size_t steps = 2000;
  double lr = 0.05;
};

/// Everything needed to regenerate one experiment. Serializes to TOML with
/// sections [bench], [trainer], [task], [output].
struct ExperimentConfig {
  optics::BenchConfig bench;
  std::string instrument = "local";  // or host:port of a remote instrument
  rl::TrainerConfig trainer;
  Algorithm algorithm = Algorithm::kPpo;
  std::vector<std::uint64_t> seeds{0};
  InsilicoSettings insilico;
  TaskConfig task;
  std::filesystem::path output_dir = "runs/out";
  std::size_t snapshot_every = 0;  // rounds between snapshots; 0 = first and last only
};

/// Built-in starting points: focus, diffuser-focus, hologram, aberration,
/// classify.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Applies a TOML document on top of `base`. Unknown sections or keys and
/// ill-typed values throw ConfigError naming the key (and line).
ExperimentConfig parse_config(std::string_view toml_text, const ExperimentConfig& base,
                              std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base);

/// Complete TOML rendering; parse_config(to_toml(c), any) == c.
std::string to_toml(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

}  // namespace insitu::experiment

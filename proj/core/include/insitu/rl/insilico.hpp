#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "insitu/blackbox/environment.hpp"
#include "insitu/optics/bench.hpp"
#include "insitu/tasks/task.hpp"

namespace insitu::rl {

/// Mean over items and pixels of (I_i - y_i)^2, where I_i is the noise-free,
/// unquantized intensity for slm_phase plus inputs[i]. An empty `inputs`
/// means a single item without an input phase.
double insilico_loss(const optics::BenchConfig& bench, const optics::PhaseMap& slm_phase,
                     std::span<const optics::PhaseMap> inputs,
                     std::span<const optics::IntensityImage> targets);

/// Adjoint-method gradient of insilico_loss with respect to slm_phase. Throws
/// ConfigError when the bench has noise enabled.
std::vector<double> insilico_gradient(const optics::BenchConfig& bench,
                                      const optics::PhaseMap& slm_phase,
                                      std::span<const optics::PhaseMap> inputs,
                                      std::span<const optics::IntensityImage> targets);

struct InsilicoConfig {
  std::size_t steps = 2000;
  double lr = 0.05;
  std::uint64_t seed = 0;
  std::optional<optics::PhaseMap> initial_phase;  // zeros when absent
};

struct InsilicoResult {
  optics::PhaseMap phase;         // best iterate seen
  double metric = 0.0;            // task metric of `phase` on the monitor, if given
  double best_loss = 0.0;
  std::vector<double> best_loss_trace;  // best-so-far loss after each step
};

/// Model-based baseline: Adam on the task's differentiable objective over the
/// noise-free twin of `bench`. The returned phase is the best iterate by loss.
InsilicoResult train_insilico(const optics::BenchConfig& bench, const tasks::Task& task,
                              const InsilicoConfig& config,
                              blackbox::Environment* monitor = nullptr);

}  // namespace insitu::rl

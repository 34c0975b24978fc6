#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "insitu/blackbox/environment.hpp"
#include "insitu/optics/bench.hpp"
#include "insitu/optics/sensor.hpp"
#include "insitu/rng.hpp"
#include "insitu/tasks/mnist.hpp"

namespace insitu::tasks {

using optics::DetectorLayout;
using optics::IntensityImage;
using optics::PhaseMap;

struct FocusSpec {
  std::size_t target_region = 0;
  DetectorLayout layout;  // exactly ten regions
};

struct HologramSpec {
  IntensityImage target;  // in [0, 1]
};

struct AberrationSpec {
  PhaseMap initial_phase;  // policy mean at t = 0
  IntensityImage target;
};

struct ClassifySpec {
  std::shared_ptr<const std::vector<LabeledDigit>> train;
  std::shared_ptr<const std::vector<LabeledDigit>> test;
  DetectorLayout layout;
  std::size_t minibatch = 8;
  std::size_t input_window = 32;
  optics::Shape grid{64, 64};
};

using TaskSpec = std::variant<FocusSpec, HologramSpec, AberrationSpec, ClassifySpec>;

/// What an experiment asks of the instrument and how it is scored.
///
/// rewards() is the only path that touches the training instrument; metric()
/// is evaluated on a separate monitor (normally the same bench without noise)
/// and never feeds back into learning. insilico_loss() is the differentiable
/// objective used by the model-based baseline.
class Task {
 public:
  virtual ~Task() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::string metric_name() const = 0;

  /// Instrument images consumed per sampled phase map.
  [[nodiscard]] virtual std::size_t measurements_per_sample() const { return 1; }

  virtual std::vector<double> rewards(blackbox::Environment& env, std::span<const PhaseMap> phases,
                                      Rng& rng) const = 0;

  virtual double metric(blackbox::Environment& monitor, const PhaseMap& phase) const = 0;

  /// Loss to minimize on the simulated twin; fills `grad` (dL/dphase) when
  /// non-null. `rng` picks minibatches for dataset tasks.
  virtual double insilico_loss(const optics::ForwardModel& model, const PhaseMap& phase,
                               std::vector<double>* grad, Rng& rng) const = 0;

  /// Representative monitor image for snapshots (classification shows the
  /// first test digit).
  virtual IntensityImage preview(blackbox::Environment& monitor, const PhaseMap& phase) const {
    return monitor.evaluate_batch(std::span(&phase, 1)).front();
  }

  /// Task-supplied policy mean at t = 0, if any.
  [[nodiscard]] virtual std::optional<PhaseMap> initial_phase() const { return std::nullopt; }
};

std::unique_ptr<Task> make_task(const TaskSpec& spec);

/// Gain-fitted MSE of an image against a target and its derivative with
/// respect to the image (the fitted gain is stationary, so it is held fixed).
double fitted_mse_with_grad(const IntensityImage& image, const IntensityImage& target,
                            std::vector<double>* dloss_dimage);

}  // namespace insitu::tasks

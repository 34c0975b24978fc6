#include "insitu/rl/insilico.hpp"

#include <cmath>

#include "insitu/errors.hpp"

namespace insitu::rl {

namespace {

void check_items(std::span<const optics::PhaseMap> inputs,
                 std::span<const optics::IntensityImage> targets) {
  if (targets.empty()) throw ConfigError("in-silico loss needs at least one target");
  if (!inputs.empty() && inputs.size() != targets.size()) {
    throw DimensionError("in-silico loss: " + std::to_string(inputs.size()) + " inputs for " +
                         std::to_string(targets.size()) + " targets");
  }
}

optics::PhaseMap displayed(const optics::PhaseMap& slm, std::span<const optics::PhaseMap> inputs,
                           std::size_t i) {
  return inputs.empty() ? slm : slm + inputs[i];
}

}  // namespace

double insilico_loss(const optics::BenchConfig& bench, const optics::PhaseMap& slm_phase,
                     std::span<const optics::PhaseMap> inputs,
                     std::span<const optics::IntensityImage> targets) {
  check_items(inputs, targets);
  const optics::ForwardModel model(bench);
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const optics::IntensityImage image = model.intensity(displayed(slm_phase, inputs, i));
    optics::require_same_shape(image.shape(), targets[i].shape(), "in-silico target");
    double sum = 0.0;
    for (std::size_t p = 0; p < image.size(); ++p) {
      const double d = image[p] - targets[i][p];
      sum += d * d;
    }
    loss += sum / static_cast<double>(image.size());
  }
  return loss / static_cast<double>(targets.size());
}

std::vector<double> insilico_gradient(const optics::BenchConfig& bench,
                                      const optics::PhaseMap& slm_phase,
                                      std::span<const optics::PhaseMap> inputs,
                                      std::span<const optics::IntensityImage> targets) {
  if (bench.noise.enabled) {
    throw ConfigError("in-silico gradient needs a noise-free bench (disable [bench] noise)");
  }
  check_items(inputs, targets);
  const optics::ForwardModel model(bench);
  std::vector<double> grad(slm_phase.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const optics::PhaseMap total = displayed(slm_phase, inputs, i);
    const optics::IntensityImage image = model.intensity(total);
    optics::require_same_shape(image.shape(), targets[i].shape(), "in-silico target");
    std::vector<double> dimage(image.size());
    for (std::size_t p = 0; p < image.size(); ++p) {
      dimage[p] = scale * (image[p] - targets[i][p]) / static_cast<double>(image.size());
    }
    const auto g = model.intensity_vjp(total, dimage);
    for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
  }
  return grad;
}

InsilicoResult train_insilico(const optics::BenchConfig& bench, const tasks::Task& task,
                              const InsilicoConfig& config, blackbox::Environment* monitor) {
  if (bench.noise.enabled) {
    throw ConfigError("in-silico training needs a noise-free bench (disable [bench] noise)");
  }
  if (!(config.lr > 0.0)) throw ConfigError("in-silico learning rate must be positive");
  const optics::ForwardModel model(bench);
  optics::PhaseMap phase = config.initial_phase.value_or(optics::PhaseMap(bench.shape));
  optics::require_same_shape(phase.shape(), bench.shape, "in-silico initial phase");

  Rng rng = make_rng(config.seed, 3);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::vector<double> m(phase.size(), 0.0);
  std::vector<double> v(phase.size(), 0.0);
  std::vector<double> grad;

  InsilicoResult result;
  result.phase = phase;
  result.best_loss = std::numeric_limits<double>::infinity();
  result.best_loss_trace.reserve(config.steps);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const double loss = task.insilico_loss(model, phase, &grad, rng);
    if (loss < result.best_loss) {
      result.best_loss = loss;
      result.phase = phase;
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < phase.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      phase[i] -= config.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
    result.best_loss_trace.push_back(result.best_loss);
  }
  if (config.steps == 0) result.best_loss = task.insilico_loss(model, phase, nullptr, rng);
  if (monitor != nullptr) result.metric = task.metric(*monitor, result.phase);
  return result;
}

}  // namespace insitu::rl

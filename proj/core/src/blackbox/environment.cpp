#include "insitu/blackbox/environment.hpp"

#include <cmath>

namespace insitu::blackbox {

EnvDescriptor describe(const optics::BenchConfig& config) {
  return EnvDescriptor{config.shape, static_cast<std::uint32_t>(1u << config.slm_bits),
                       config.shape, kProtocolVersion};
}

void Environment::check_shapes(const PhaseMap* input_phase,
                               std::span<const PhaseMap> phases) const {
  const Shape grid = descriptor().grid;
  if (input_phase != nullptr) optics::require_same_shape(input_phase->shape(), grid, "input phase");
  for (const PhaseMap& p : phases) optics::require_same_shape(p.shape(), grid, "phase");
}

PhaseMap to_wire_precision(const PhaseMap& phase) {
  PhaseMap out = phase;
  for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

IntensityImage to_wire_precision(const IntensityImage& image) {
  std::vector<double> values(image.values().begin(), image.values().end());
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
  return IntensityImage(image.shape(), std::move(values));
}

LocalEnvironment::LocalEnvironment(const optics::BenchConfig& config, std::uint64_t stream_index)
    : bench_(config), descriptor_(describe(config)), rng_(make_rng(config.seed, stream_index)) {}

std::vector<IntensityImage> LocalEnvironment::evaluate_batch(const PhaseMap* input_phase,
                                                             std::span<const PhaseMap> phases) {
  check_shapes(input_phase, phases);
  std::optional<PhaseMap> input;
  if (input_phase != nullptr) input = to_wire_precision(*input_phase);
  std::vector<IntensityImage> images;
  images.reserve(phases.size());
  for (const PhaseMap& phase : phases) {
    images.push_back(to_wire_precision(
        bench_.run(input ? &*input : nullptr, to_wire_precision(phase), rng_)));
    ++count_;
  }
  return images;
}

}  // namespace insitu::blackbox

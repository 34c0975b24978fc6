#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "insitu/optics/bench.hpp"

namespace insitu::blackbox {

using optics::IntensityImage;
using optics::PhaseMap;
using optics::Shape;

inline constexpr std::uint32_t kProtocolVersion = 1;

/// Everything the optimizer may know about the instrument.
struct EnvDescriptor {
  Shape grid;
  std::uint32_t phase_levels = 256;
  Shape sensor;
  std::uint32_t protocol_version = kProtocolVersion;

  friend bool operator==(const EnvDescriptor&, const EnvDescriptor&) = default;
};

EnvDescriptor describe(const optics::BenchConfig& config);

/// The optimizer's only view of the optical system: phases in, intensity
/// images out. Phases and images cross the boundary at float32 precision in
/// every binding, so local and remote instruments agree bit for bit.
class Environment {
 public:
  virtual ~Environment() = default;

  [[nodiscard]] virtual EnvDescriptor descriptor() const = 0;

  /// One image per phase, in order. `input_phase` (may be null) is the data
  /// encoding shown on the SLM together with each phase.
  virtual std::vector<IntensityImage> evaluate_batch(const PhaseMap* input_phase,
                                                     std::span<const PhaseMap> phases) = 0;

  std::vector<IntensityImage> evaluate_batch(std::span<const PhaseMap> phases) {
    return evaluate_batch(nullptr, phases);
  }

  /// Number of images produced so far.
  [[nodiscard]] virtual std::uint64_t measurement_count() const = 0;

 protected:
  void check_shapes(const PhaseMap* input_phase, std::span<const PhaseMap> phases) const;
};

// Rounds every phase sample through float32, the wire precision.
PhaseMap to_wire_precision(const PhaseMap& phase);
IntensityImage to_wire_precision(const IntensityImage& image);

/// In-process instrument backed by the simulator. Noise draws come from the
/// stream (config.seed, stream_index), matching the server's stream for the
/// connection with the same index.
class LocalEnvironment final : public Environment {
 public:
  explicit LocalEnvironment(const optics::BenchConfig& config, std::uint64_t stream_index = 0);

  [[nodiscard]] EnvDescriptor descriptor() const override { return descriptor_; }
  std::vector<IntensityImage> evaluate_batch(const PhaseMap* input_phase,
                                             std::span<const PhaseMap> phases) override;
  using Environment::evaluate_batch;
  [[nodiscard]] std::uint64_t measurement_count() const override { return count_; }

 private:
  optics::Bench bench_;
  EnvDescriptor descriptor_;
  Rng rng_;
  std::uint64_t count_ = 0;
};

}  // namespace insitu::blackbox

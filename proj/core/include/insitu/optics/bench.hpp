#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "insitu/optics/field.hpp"
#include "insitu/optics/imperfections.hpp"
#include "insitu/optics/propagation.hpp"
#include "insitu/optics/sensor.hpp"
#include "insitu/rng.hpp"

namespace insitu::optics {

struct DiffuserConfig {
  std::uint64_t seed = 7;
  double correlation_length_px = 4.0;

  friend bool operator==(const DiffuserConfig&, const DiffuserConfig&) = default;
};

struct AberrationConfig {
  ZernikeCoefficients zernike;
  // Integer lateral displacement of the sensor window, in pixels.
  int shift_rows = 0;
  int shift_cols = 0;

  friend bool operator==(const AberrationConfig&, const AberrationConfig&) = default;
};

/// Complete description of the simulated instrument. The diffuser and
/// aberration blocks are the hidden imperfections: only the instrument side of
/// the black-box boundary ever reads them.
struct BenchConfig {
  double distance_mm = 100.0;
  double wavelength_um = 0.52;
  double pitch_um = 8.0;
  Shape shape{64, 64};
  NoiseModel noise{};
  int slm_bits = 8;
  std::optional<DiffuserConfig> diffuser;
  std::optional<AberrationConfig> aberration;
  std::uint64_t seed = 0;
  std::size_t pad_factor = 2;

  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

void validate(const BenchConfig& config);

/// Same geometry with every imperfection and all noise removed.
BenchConfig ideal_twin(const BenchConfig& config);

/// Deterministic, continuous optical train: plane wave -> SLM phase ->
/// aberration -> propagation (through the diffuser at mid-distance when one is
/// configured) -> shifted sensor window. No quantization and no noise; this is
/// the differentiable model the in-silico baseline optimizes against.
class ForwardModel {
 public:
  explicit ForwardModel(const BenchConfig& config);

  [[nodiscard]] Shape shape() const { return config_.shape; }
  [[nodiscard]] const BenchConfig& config() const { return config_; }

  /// Complex field at the SLM output for a total displayed phase.
  [[nodiscard]] std::vector<Complex> slm_field(const PhaseMap& phase) const;
  /// Linear optical transfer from the SLM output to the sensor.
  [[nodiscard]] ComplexField transfer(std::span<const Complex> slm_field) const;
  /// Adjoint of transfer().
  [[nodiscard]] std::vector<Complex> transfer_adjoint(std::span<const Complex> sensor_field) const;

  [[nodiscard]] ComplexField sensor_field(const PhaseMap& phase) const {
    return transfer(slm_field(phase));
  }
  [[nodiscard]] IntensityImage intensity(const PhaseMap& phase) const;

  /// Backpropagates dL/dI (one value per sensor pixel) to dL/dphase through
  /// I = |T v|^2 with v the SLM field: dL/dphi_p = 2 Im(conj(v_p) w_p) where
  /// w = T^H (dL/dI * u).
  [[nodiscard]] std::vector<double> intensity_vjp(const PhaseMap& phase,
                                                  std::span<const double> dloss_dintensity) const;

 private:
  BenchConfig config_;
  std::vector<Complex> aberration_factor_;  // empty when no aberration
  std::vector<Complex> diffuser_factor_;    // empty when no diffuser
  std::optional<AngularSpectrumPropagator> first_leg_;
  AngularSpectrumPropagator last_leg_;
};

/// The simulated instrument: the forward model plus SLM quantization of the
/// displayed phase and sensor noise.
///
/// Pipeline: plane-wave illumination -> input phase (if any) plus SLM phase,
/// quantized together since both are shown on the same SLM -> hidden
/// aberration -> propagation with optional diffuser -> sensor shift -> measure.
class Bench {
 public:
  explicit Bench(BenchConfig config);

  [[nodiscard]] const BenchConfig& config() const { return model_.config(); }
  [[nodiscard]] Shape shape() const { return model_.shape(); }

  [[nodiscard]] IntensityImage run(const PhaseMap* input_phase, const PhaseMap& slm_phase,
                                   Rng& rng) const;

 private:
  ForwardModel model_;
};

IntensityImage run_bench(const BenchConfig& config, const PhaseMap* input_phase,
                         const PhaseMap& slm_phase, Rng& rng);

}  // namespace insitu::optics

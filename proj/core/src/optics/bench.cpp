#include "insitu/optics/bench.hpp"

#include <cmath>
#include <string>

#include "insitu/optics/modulation.hpp"

namespace insitu::optics {

void validate(const BenchConfig& config) {
  if (!(config.distance_mm >= 0.0) || !std::isfinite(config.distance_mm)) {
    throw ConfigError("bench distance must be >= 0 mm");
  }
  if (!(config.wavelength_um > 0.0) || !(config.pitch_um > 0.0)) {
    throw ConfigError("bench wavelength and pitch must be positive");
  }
  if (!is_power_of_two(config.shape.rows) || !is_power_of_two(config.shape.cols)) {
    throw DimensionError("bench grid must be powers of two, got " + to_string(config.shape));
  }
  if (config.slm_bits < 1 || config.slm_bits > 16) {
    throw ConfigError("slm_bits must be in [1, 16], got " + std::to_string(config.slm_bits));
  }
  if (config.pad_factor == 0 || !is_power_of_two(config.pad_factor)) {
    throw ConfigError("pad_factor must be a positive power of two");
  }
  validate(config.noise);
  if (config.diffuser && !(config.diffuser->correlation_length_px >= 0.0)) {
    throw ConfigError("diffuser correlation length must be >= 0");
  }
  if (config.aberration) {
    const auto limit = static_cast<int>(config.shape.rows * (config.pad_factor - 1) / 2);
    const auto& a = *config.aberration;
    if (config.pad_factor > 1 && (std::abs(a.shift_rows) > limit || std::abs(a.shift_cols) > limit)) {
      throw ConfigError("sensor shift exceeds the padded propagation window");
    }
  }
}

BenchConfig ideal_twin(const BenchConfig& config) {
  BenchConfig out = config;
  out.diffuser.reset();
  out.aberration.reset();
  out.noise.enabled = false;
  return out;
}

namespace {

double first_leg_mm(const BenchConfig& config) {
  return config.diffuser ? config.distance_mm / 2.0 : config.distance_mm;
}

}  // namespace

ForwardModel::ForwardModel(const BenchConfig& config)
    : config_((validate(config), config)),
      last_leg_(config.shape, config.pitch_um, config.wavelength_um,
                config.distance_mm - (config.diffuser ? first_leg_mm(config) : 0.0),
                config.pad_factor) {
  if (config_.aberration) {
    const PhaseMap ab = zernike_phase(config_.aberration->zernike, config_.shape);
    aberration_factor_.resize(ab.size());
    for (std::size_t i = 0; i < ab.size(); ++i) aberration_factor_[i] = std::polar(1.0, ab[i]);
  }
  if (config_.diffuser) {
    const PhaseMap screen = make_diffuser(config_.diffuser->seed,
                                          config_.diffuser->correlation_length_px, config_.shape);
    diffuser_factor_.resize(screen.size());
    for (std::size_t i = 0; i < screen.size(); ++i) diffuser_factor_[i] = std::polar(1.0, screen[i]);
    first_leg_.emplace(config_.shape, config_.pitch_um, config_.wavelength_um,
                       first_leg_mm(config_), config_.pad_factor);
  }
}

std::vector<Complex> ForwardModel::slm_field(const PhaseMap& phase) const {
  require_same_shape(phase.shape(), config_.shape, "slm phase");
  std::vector<Complex> field(phase.size());
  for (std::size_t i = 0; i < field.size(); ++i) field[i] = std::polar(1.0, phase[i]);
  if (!aberration_factor_.empty()) {
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= aberration_factor_[i];
  }
  return field;
}

ComplexField ForwardModel::transfer(std::span<const Complex> slm) const {
  ComplexField out(config_.shape, config_.pitch_um, config_.wavelength_um);
  auto dst = out.mutable_amplitude().values();
  const int sr = config_.aberration ? config_.aberration->shift_rows : 0;
  const int sc = config_.aberration ? config_.aberration->shift_cols : 0;
  if (first_leg_) {
    std::vector<Complex> mid(slm.size());
    first_leg_->propagate_into(slm, mid, 0, 0);
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] *= diffuser_factor_[i];
    last_leg_.propagate_into(mid, dst, sr, sc);
  } else {
    last_leg_.propagate_into(slm, dst, sr, sc);
  }
  return out;
}

std::vector<Complex> ForwardModel::transfer_adjoint(std::span<const Complex> sensor) const {
  const int sr = config_.aberration ? config_.aberration->shift_rows : 0;
  const int sc = config_.aberration ? config_.aberration->shift_cols : 0;
  std::vector<Complex> out(sensor.size());
  if (first_leg_) {
    std::vector<Complex> mid(sensor.size());
    last_leg_.adjoint_into(sensor, mid, sr, sc);
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] *= std::conj(diffuser_factor_[i]);
    first_leg_->adjoint_into(mid, out, 0, 0);
  } else {
    last_leg_.adjoint_into(sensor, out, sr, sc);
  }
  return out;
}

IntensityImage ForwardModel::intensity(const PhaseMap& phase) const {
  Rng unused(0);
  return measure(sensor_field(phase), NoiseModel::disabled(), unused);
}

std::vector<double> ForwardModel::intensity_vjp(const PhaseMap& phase,
                                                std::span<const double> dloss_dintensity) const {
  if (dloss_dintensity.size() != config_.shape.size()) {
    throw DimensionError("intensity cotangent size mismatch");
  }
  const std::vector<Complex> v = slm_field(phase);
  const ComplexField u = transfer(v);
  std::vector<Complex> weighted(u.shape().size());
  const auto uv = u.amplitude().values();
  for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] = dloss_dintensity[i] * uv[i];
  const std::vector<Complex> w = transfer_adjoint(weighted);
  std::vector<double> grad(v.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = 2.0 * std::imag(std::conj(v[i]) * w[i]);
  return grad;
}

Bench::Bench(BenchConfig config) : model_(config) {}

IntensityImage Bench::run(const PhaseMap* input_phase, const PhaseMap& slm_phase, Rng& rng) const {
  const BenchConfig& config = model_.config();
  require_same_shape(slm_phase.shape(), config.shape, "run_bench slm phase");
  PhaseMap displayed = slm_phase;
  if (input_phase != nullptr) {
    require_same_shape(input_phase->shape(), config.shape, "run_bench input phase");
    displayed = displayed + *input_phase;
  }
  displayed = quantize_phase(displayed, config.slm_bits);
  return measure(model_.sensor_field(displayed), config.noise, rng);
}

IntensityImage run_bench(const BenchConfig& config, const PhaseMap* input_phase,
                         const PhaseMap& slm_phase, Rng& rng) {
  return Bench(config).run(input_phase, slm_phase, rng);
}

}  // namespace insitu::optics

#include "insitu/optics/modulation.hpp"

#include <cmath>
#include <string>

namespace insitu::optics {

ComplexField apply_phase(const ComplexField& field, const PhaseMap& phase) {
  require_same_shape(field.shape(), phase.shape(), "apply_phase");
  ComplexField out = field;
  auto values = out.mutable_amplitude().values();
  const auto phases = phase.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (phases[i] != 0.0) values[i] *= std::polar(1.0, phases[i]);
  }
  return out;
}

namespace {
void check_bits(int bits) {
  if (bits < 1 || bits > 16) {
    throw ConfigError("SLM bit depth must be in [1, 16], got " + std::to_string(bits));
  }
}
}  // namespace

double quantize_value(double radians, int bits) {
  const double levels = std::ldexp(1.0, bits);
  const double step = kTwoPi / levels;
  double k = std::nearbyint(wrap_phase(radians) / step);
  if (k >= levels) k -= levels;
  return k * step;
}

PhaseMap quantize_phase(const PhaseMap& phase, int bits) {
  check_bits(bits);
  PhaseMap out = phase;
  for (double& v : out.values()) v = quantize_value(v, bits);
  return out;
}

}  // namespace insitu::optics

#include "insitu/optics/field.hpp"

#include <algorithm>
#include <cmath>

namespace insitu::optics {

std::string to_string(Shape shape) {
  return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
}

void require_same_shape(Shape a, Shape b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape " + to_string(a) + " does not match " +
                         to_string(b));
  }
}

double wrap_phase(double radians) {
  double w = std::fmod(radians, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative plus 2*pi can round up to exactly 2*pi.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

namespace {

void validate_geometry(Shape shape, double pitch_um, double wavelength_um) {
  if (!is_power_of_two(shape.rows) || !is_power_of_two(shape.cols)) {
    throw DimensionError("field grid must be powers of two, got " + to_string(shape));
  }
  if (!(pitch_um > 0.0) || !std::isfinite(pitch_um)) {
    throw ConfigError("field pitch must be positive");
  }
  if (!(wavelength_um > 0.0) || !std::isfinite(wavelength_um)) {
    throw ConfigError("field wavelength must be positive");
  }
}

}  // namespace

ComplexField::ComplexField(Shape shape, double pitch_um, double wavelength_um, Complex fill)
    : amplitude_(shape, fill), pitch_um_(pitch_um), wavelength_um_(wavelength_um) {
  validate_geometry(shape, pitch_um, wavelength_um);
  if (!std::isfinite(fill.real()) || !std::isfinite(fill.imag())) {
    throw DataError("field fill value is not finite");
  }
}

ComplexField::ComplexField(Grid<Complex> amplitude, double pitch_um, double wavelength_um)
    : amplitude_(std::move(amplitude)), pitch_um_(pitch_um), wavelength_um_(wavelength_um) {
  validate_geometry(amplitude_.shape(), pitch_um, wavelength_um);
  for (const Complex& v : amplitude_.values()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DataError("field contains a non-finite sample");
    }
  }
}

double ComplexField::total_energy() const {
  double sum = 0.0;
  for (const Complex& v : amplitude_.values()) sum += std::norm(v);
  return sum;
}

PhaseMap::PhaseMap(Shape shape, std::vector<double> radians) : values_(shape, std::move(radians)) {
  for (double v : values_.values()) {
    if (!std::isfinite(v)) throw DataError("phase map contains a non-finite value");
  }
}

PhaseMap PhaseMap::wrapped() const {
  PhaseMap out = *this;
  for (double& v : out.values()) v = wrap_phase(v);
  return out;
}

PhaseMap operator+(const PhaseMap& a, const PhaseMap& b) {
  require_same_shape(a.shape(), b.shape(), "phase addition");
  PhaseMap out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

IntensityImage::IntensityImage(Shape shape, double fill) : values_(shape, fill) {
  if (!(fill >= 0.0) || !std::isfinite(fill)) throw DataError("intensity must be finite and >= 0");
}

IntensityImage::IntensityImage(Shape shape, std::vector<double> values)
    : values_(shape, std::move(values)) {
  for (double v : values_.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DataError("intensity must be finite and >= 0");
    }
  }
}

double IntensityImage::total() const {
  double sum = 0.0;
  for (double v : values_.values()) sum += v;
  return sum;
}

}  // namespace insitu::optics

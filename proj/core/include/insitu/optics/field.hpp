#pragma once

#include <numbers>
#include <vector>

#include "insitu/optics/grid.hpp"

namespace insitu::optics {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [0, 2*pi).
double wrap_phase(double radians);

/// Complex scalar wavefront sampled on a uniform grid. Rows and columns must be
/// powers of two and every sample finite.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(Shape shape, double pitch_um, double wavelength_um, Complex fill = {1.0, 0.0});
  ComplexField(Grid<Complex> amplitude, double pitch_um, double wavelength_um);

  [[nodiscard]] Shape shape() const { return amplitude_.shape(); }
  [[nodiscard]] double pitch_um() const { return pitch_um_; }
  [[nodiscard]] double wavelength_um() const { return wavelength_um_; }

  [[nodiscard]] const Grid<Complex>& amplitude() const { return amplitude_; }
  // Mutable access skips the finiteness check; callers own that invariant.
  [[nodiscard]] Grid<Complex>& mutable_amplitude() { return amplitude_; }

  Complex operator()(std::size_t r, std::size_t c) const { return amplitude_(r, c); }

  [[nodiscard]] double total_energy() const;

  friend bool operator==(const ComplexField&, const ComplexField&) = default;

 private:
  Grid<Complex> amplitude_;
  double pitch_um_ = 0.0;
  double wavelength_um_ = 0.0;
};

/// Real phase pattern in radians. Values may be any finite real; wrapped()
/// gives the canonical [0, 2*pi) form.
class PhaseMap {
 public:
  PhaseMap() = default;
  explicit PhaseMap(Shape shape, double fill = 0.0) : values_(shape, fill) {}
  PhaseMap(Shape shape, std::vector<double> radians);

  [[nodiscard]] Shape shape() const { return values_.shape(); }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
  double& operator()(std::size_t r, std::size_t c) { return values_(r, c); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const { return values_.values(); }
  [[nodiscard]] std::span<double> values() { return values_.values(); }

  [[nodiscard]] PhaseMap wrapped() const;

  friend bool operator==(const PhaseMap&, const PhaseMap&) = default;

 private:
  Grid<double> values_;
};

PhaseMap operator+(const PhaseMap& a, const PhaseMap& b);

/// Non-negative sensor intensity in arbitrary units.
class IntensityImage {
 public:
  IntensityImage() = default;
  explicit IntensityImage(Shape shape, double fill = 0.0);
  IntensityImage(Shape shape, std::vector<double> values);

  [[nodiscard]] Shape shape() const { return values_.shape(); }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
  double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const { return values_.values(); }

  [[nodiscard]] double total() const;

  friend bool operator==(const IntensityImage&, const IntensityImage&) = default;

 private:
  Grid<double> values_;
};

}  // namespace insitu::optics

#pragma once

#include <vector>

#include "insitu/optics/field.hpp"
#include "insitu/rng.hpp"

namespace insitu::optics {

// Shot noise plus additive read noise. With noise enabled the image is in
// photon counts: Poisson(photon_budget * I / sum(I)) + N(0, read_sigma),
// clamped at zero.
struct NoiseModel {
  bool enabled = true;
  double photon_budget = 1e5;
  // Sensor units (photon counts). The default is 1e-3 of the mean per-pixel
  // signal on a 64x64 sensor at the default photon budget.
  double read_sigma = 1e-3 * 1e5 / 4096.0;

  static NoiseModel disabled() { return NoiseModel{.enabled = false}; }
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

void validate(const NoiseModel& noise);

IntensityImage measure(const ComplexField& field, const NoiseModel& noise, Rng& rng);

struct Region {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

class DetectorLayout {
 public:
  DetectorLayout() = default;
  explicit DetectorLayout(std::vector<Region> regions);

  /// Two rows of five square regions with `gap` pixels between neighbours,
  /// centered on the sensor.
  static DetectorLayout grid_2x5(Shape sensor, std::size_t region_size = 6, std::size_t gap = 8);

  [[nodiscard]] const std::vector<Region>& regions() const { return regions_; }
  [[nodiscard]] std::size_t size() const { return regions_.size(); }

  /// Throws LayoutError if regions overlap or leave the sensor.
  void validate_for(Shape sensor) const;

  friend bool operator==(const DetectorLayout&, const DetectorLayout&) = default;

 private:
  std::vector<Region> regions_;
};

std::vector<double> detector_energies(const IntensityImage& image, const DetectorLayout& layout);

}  // namespace insitu::optics

#include "insitu/optics/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/poisson_distribution.hpp>

namespace insitu::optics {

void validate(const NoiseModel& noise) {
  if (!noise.enabled) return;
  if (!(noise.photon_budget > 0.0) || !std::isfinite(noise.photon_budget)) {
    throw ConfigError("photon_budget must be > 0 when noise is enabled");
  }
  if (!(noise.read_sigma >= 0.0) || !std::isfinite(noise.read_sigma)) {
    throw ConfigError("read_sigma must be >= 0");
  }
}

IntensityImage measure(const ComplexField& field, const NoiseModel& noise, Rng& rng) {
  const auto amp = field.amplitude().values();
  std::vector<double> intensity(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) intensity[i] = std::norm(amp[i]);
  if (!noise.enabled) return IntensityImage(field.shape(), std::move(intensity));

  validate(noise);
  double total = 0.0;
  for (double v : intensity) total += v;
  const double scale = total > 0.0 ? noise.photon_budget / total : 0.0;
  std::normal_distribution<double> read(0.0, 1.0);
  for (double& v : intensity) {
    const double mean = v * scale;
    double counts = 0.0;
    if (mean > 0.0) {
      // Boost's PTRS sampler: libstdc++ redoes an lgamma-heavy setup per mean.
      boost::random::poisson_distribution<long long, double> shot(mean);
      counts = static_cast<double>(shot(rng));
    }
    if (noise.read_sigma > 0.0) counts += noise.read_sigma * read(rng);
    v = std::max(counts, 0.0);
  }
  return IntensityImage(field.shape(), std::move(intensity));
}

DetectorLayout::DetectorLayout(std::vector<Region> regions) : regions_(std::move(regions)) {
  for (const Region& r : regions_) {
    if (r.height == 0 || r.width == 0) throw LayoutError("detector region has zero area");
  }
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    for (std::size_t j = i + 1; j < regions_.size(); ++j) {
      const Region& a = regions_[i];
      const Region& b = regions_[j];
      const bool rows_overlap = a.row < b.row + b.height && b.row < a.row + a.height;
      const bool cols_overlap = a.col < b.col + b.width && b.col < a.col + a.width;
      if (rows_overlap && cols_overlap) {
        throw LayoutError("detector regions " + std::to_string(i) + " and " + std::to_string(j) +
                          " overlap");
      }
    }
  }
}

DetectorLayout DetectorLayout::grid_2x5(Shape sensor, std::size_t region_size, std::size_t gap) {
  const std::size_t width = 5 * region_size + 4 * gap;
  const std::size_t height = 2 * region_size + gap;
  if (width > sensor.cols || height > sensor.rows) {
    throw LayoutError("2x5 detector grid does not fit a " + to_string(sensor) + " sensor");
  }
  const std::size_t row0 = (sensor.rows - height) / 2;
  const std::size_t col0 = (sensor.cols - width) / 2;
  std::vector<Region> regions;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      regions.push_back({row0 + r * (region_size + gap), col0 + c * (region_size + gap),
                         region_size, region_size});
    }
  }
  return DetectorLayout(std::move(regions));
}

void DetectorLayout::validate_for(Shape sensor) const {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const Region& r = regions_[i];
    if (r.row + r.height > sensor.rows || r.col + r.width > sensor.cols) {
      throw LayoutError("detector region " + std::to_string(i) + " lies outside the " +
                        to_string(sensor) + " sensor");
    }
  }
}

std::vector<double> detector_energies(const IntensityImage& image, const DetectorLayout& layout) {
  layout.validate_for(image.shape());
  std::vector<double> energies;
  energies.reserve(layout.size());
  for (const Region& region : layout.regions()) {
    double sum = 0.0;
    for (std::size_t r = region.row; r < region.row + region.height; ++r) {
      for (std::size_t c = region.col; c < region.col + region.width; ++c) sum += image(r, c);
    }
    energies.push_back(sum);
  }
  return energies;
}

}  // namespace insitu::optics

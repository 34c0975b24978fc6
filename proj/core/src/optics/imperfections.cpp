#include "insitu/optics/imperfections.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "insitu/rng.hpp"

namespace insitu::optics {

namespace {

// Periodic 1D Gaussian smoothing along rows then columns.
std::vector<double> smooth(const std::vector<double>& in, Shape shape, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    norm += w;
  }
  for (double& w : kernel) w /= norm;

  auto wrap = [](std::ptrdiff_t i, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };

  std::vector<double> tmp(in.size(), 0.0);
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               in[r * shape.cols + wrap(static_cast<std::ptrdiff_t>(c) + k, shape.cols)];
      }
      tmp[r * shape.cols + c] = acc;
    }
  }
  std::vector<double> out(in.size(), 0.0);
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp[wrap(static_cast<std::ptrdiff_t>(r) + k, shape.rows) * shape.cols + c];
      }
      out[r * shape.cols + c] = acc;
    }
  }
  return out;
}

}  // namespace

PhaseMap make_diffuser(std::uint64_t seed, double correlation_length_px, Shape shape) {
  if (!(correlation_length_px >= 0.0)) throw ConfigError("correlation length must be >= 0");
  Rng rng = make_rng(seed, 0xd1ffu);
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
  std::vector<double> values(shape.size());
  for (double& v : values) v = uniform(rng);
  if (correlation_length_px == 0.0) return PhaseMap(shape, std::move(values));

  values = smooth(values, shape, correlation_length_px);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double span = *hi - *lo;
  for (double& v : values) v = span > 0.0 ? wrap_phase((v - min) / span * kTwoPi) : 0.0;
  return PhaseMap(shape, std::move(values));
}

PhaseMap zernike_phase(const ZernikeCoefficients& coeffs, Shape shape) {
  PhaseMap out(shape, 0.0);
  const double cr = static_cast<double>(shape.rows / 2);
  const double cc = static_cast<double>(shape.cols / 2);
  const double radius = static_cast<double>(std::min(shape.rows, shape.cols)) / 2.0;
  const double s3 = std::sqrt(3.0);
  const double s6 = std::sqrt(6.0);
  const double s8 = std::sqrt(8.0);
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const double y = (static_cast<double>(r) - cr) / radius;
      const double x = (static_cast<double>(c) - cc) / radius;
      const double rho2 = x * x + y * y;
      if (rho2 > 1.0) continue;
      const double rho = std::sqrt(rho2);
      const double theta = std::atan2(y, x);
      out(r, c) = coeffs.defocus * s3 * (2.0 * rho2 - 1.0) +
                  coeffs.astigmatism * s6 * rho2 * std::cos(2.0 * theta) +
                  coeffs.coma * s8 * (3.0 * rho2 * rho - 2.0 * rho) * std::cos(theta);
    }
  }
  return out;
}

}  // namespace insitu::optics

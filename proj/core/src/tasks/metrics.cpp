#include "insitu/tasks/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "insitu/errors.hpp"

namespace insitu::tasks {

double reward_focus(std::span<const double> energies, std::size_t target_index, bool* degenerate) {
  if (target_index >= energies.size()) {
    throw ConfigError("focus target index " + std::to_string(target_index) + " out of range");
  }
  double total = 0.0;
  for (double e : energies) {
    if (!(e >= 0.0)) throw DataError("detector energies must be non-negative");
    total += e;
  }
  if (degenerate != nullptr) *degenerate = total == 0.0;
  if (total == 0.0) return 0.0;
  return energies[target_index] / total;
}

double fitted_gain(const IntensityImage& measured, const IntensityImage& target) {
  optics::require_same_shape(measured.shape(), target.shape(), "gain fit");
  double mt = 0.0;
  double mm = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    mt += measured[i] * target[i];
    mm += measured[i] * measured[i];
  }
  return mm > 0.0 ? mt / mm : 0.0;
}

double fitted_mse(const IntensityImage& measured, const IntensityImage& target) {
  const double g = fitted_gain(measured, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double d = g * measured[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(measured.size());
}

double reward_hologram(const IntensityImage& measured, const IntensityImage& target) {
  return -fitted_mse(measured, target);
}

double psnr(const IntensityImage& measured, const IntensityImage& target) {
  const double mse = fitted_mse(measured, target);
  if (mse < 1e-10) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double contrast(std::span<const double> profile) {
  if (profile.empty()) throw DataError("contrast of an empty profile");
  const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
  if (*lo < 0.0) throw DataError("contrast profile must be non-negative");
  const double sum = *hi + *lo;
  return sum == 0.0 ? 0.0 : (*hi - *lo) / sum;
}

std::vector<double> center_row(const IntensityImage& image) {
  const std::size_t row = image.shape().rows / 2;
  std::vector<double> out(image.shape().cols);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = image(row, c);
  return out;
}

std::vector<double> class_scores(std::span<const double> energies) {
  std::vector<double> scores(energies.size(), 0.0);
  if (energies.empty()) return scores;
  double total = 0.0;
  for (double e : energies) {
    if (!(e >= 0.0)) throw DataError("detector energies must be non-negative");
    total += e;
  }
  if (total == 0.0) {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(energies.size()));
    return scores;
  }
  double peak = 0.0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    scores[k] = kClassScoreTemperature * energies[k] / total;
    peak = std::max(peak, scores[k]);
  }
  double norm = 0.0;
  for (double& s : scores) {
    s = std::exp(s - peak);
    norm += s;
  }
  for (double& s : scores) s /= norm;
  return scores;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace insitu::tasks

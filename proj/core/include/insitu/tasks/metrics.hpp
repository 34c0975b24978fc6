#pragma once

#include <span>
#include <vector>

#include "insitu/optics/field.hpp"

namespace insitu::tasks {

using optics::IntensityImage;

/// Energy ratio of the target region: energies[target] / sum(energies).
/// All-zero energies give 0 and set *degenerate when provided.
double reward_focus(std::span<const double> energies, std::size_t target_index,
                    bool* degenerate = nullptr);

/// Least-squares gain <measured, target> / <measured, measured>; 0 for an
/// all-zero measurement.
double fitted_gain(const IntensityImage& measured, const IntensityImage& target);

/// Mean squared error of the gain-fitted measurement against the target.
double fitted_mse(const IntensityImage& measured, const IntensityImage& target);

/// -fitted_mse: invariant to positive scaling of the measurement.
double reward_hologram(const IntensityImage& measured, const IntensityImage& target);

inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(1 / fitted_mse), capped at 100 dB when the error is below 1e-10.
/// The target is expected to peak at 1.
double psnr(const IntensityImage& measured, const IntensityImage& target);

/// Michelson contrast (max - min) / (max + min); 0 when max + min == 0.
double contrast(std::span<const double> profile);

/// Horizontal intensity slice through the image's center row.
std::vector<double> center_row(const IntensityImage& image);

inline constexpr double kClassScoreTemperature = 10.0;

/// softmax(10 * e / sum(e)); uniform for all-zero energies.
std::vector<double> class_scores(std::span<const double> energies);

std::size_t argmax(std::span<const double> values);

}  // namespace insitu::tasks

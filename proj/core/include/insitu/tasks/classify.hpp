#pragma once

#include <span>

#include "insitu/blackbox/environment.hpp"
#include "insitu/optics/sensor.hpp"
#include "insitu/tasks/mnist.hpp"

namespace insitu::tasks {

inline constexpr std::size_t kDefaultInputWindow = 32;

/// Phase encoding of a digit on the SLM plane: pi * pixel, the 28x28 digit
/// resized bilinearly to a window x window square centered in `grid`, zero
/// elsewhere.
optics::PhaseMap encode_digit(const LabeledDigit& digit, optics::Shape grid,
                              std::size_t window = kDefaultInputWindow);

/// Energy fraction landing in the correct class region, one value per image.
double correct_fraction(const optics::IntensityImage& image, int label,
                        const optics::DetectorLayout& layout);

/// Mean correct-region energy fraction of `phase` over the digits. Each digit
/// costs one measurement.
double reward_classify(blackbox::Environment& env, const optics::PhaseMap& phase,
                       std::span<const LabeledDigit> digits, const optics::DetectorLayout& layout,
                       std::size_t window = kDefaultInputWindow);

/// Fraction of digits whose brightest region is their label. Pass a
/// noise-free environment for reproducible numbers.
double accuracy(blackbox::Environment& env, const optics::PhaseMap& phase,
                std::span<const LabeledDigit> test_set, const optics::DetectorLayout& layout,
                std::size_t window = kDefaultInputWindow);

}  // namespace insitu::tasks

#include "insitu/tasks/classify.hpp"

#include <numbers>

#include "insitu/errors.hpp"
#include "insitu/tasks/metrics.hpp"
#include "insitu/tasks/targets.hpp"

namespace insitu::tasks {

optics::PhaseMap encode_digit(const LabeledDigit& digit, optics::Shape grid, std::size_t window) {
  if (window == 0 || window > grid.rows || window > grid.cols) {
    throw ConfigError("input window of " + std::to_string(window) + " px does not fit the " +
                      optics::to_string(grid) + " SLM");
  }
  const auto resized = resize_bilinear(digit.pixels, {kDigitSide, kDigitSide}, {window, window});
  optics::PhaseMap out(grid);
  const std::size_t r0 = (grid.rows - window) / 2;
  const std::size_t c0 = (grid.cols - window) / 2;
  for (std::size_t r = 0; r < window; ++r) {
    for (std::size_t c = 0; c < window; ++c) {
      out(r0 + r, c0 + c) = std::numbers::pi * resized[r * window + c];
    }
  }
  return out;
}

double correct_fraction(const optics::IntensityImage& image, int label,
                        const optics::DetectorLayout& layout) {
  const auto energies = optics::detector_energies(image, layout);
  return reward_focus(energies, static_cast<std::size_t>(label));
}

double reward_classify(blackbox::Environment& env, const optics::PhaseMap& phase,
                       std::span<const LabeledDigit> digits, const optics::DetectorLayout& layout,
                       std::size_t window) {
  if (digits.empty()) throw ConfigError("reward_classify needs at least one digit");
  double sum = 0.0;
  for (const LabeledDigit& d : digits) {
    const optics::PhaseMap input = encode_digit(d, phase.shape(), window);
    const auto images = env.evaluate_batch(&input, std::span(&phase, 1));
    sum += correct_fraction(images.front(), d.label, layout);
  }
  return sum / static_cast<double>(digits.size());
}

double accuracy(blackbox::Environment& env, const optics::PhaseMap& phase,
                std::span<const LabeledDigit> test_set, const optics::DetectorLayout& layout,
                std::size_t window) {
  if (test_set.empty()) throw ConfigError("accuracy needs a non-empty test set");
  std::size_t hits = 0;
  for (const LabeledDigit& d : test_set) {
    const optics::PhaseMap input = encode_digit(d, phase.shape(), window);
    const auto images = env.evaluate_batch(&input, std::span(&phase, 1));
    const auto energies = optics::detector_energies(images.front(), layout);
    if (argmax(energies) == static_cast<std::size_t>(d.label)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test_set.size());
}

}  // namespace insitu::tasks

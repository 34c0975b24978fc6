#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace insitu::tasks {

inline constexpr std::size_t kDigitSide = 28;

struct LabeledDigit {
  std::array<double, kDigitSide * kDigitSide> pixels{};  // row-major, in [0, 1]
  int label = 0;

  friend bool operator==(const LabeledDigit&, const LabeledDigit&) = default;
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixel bytes are scaled by 1/255. Throws FormatError naming the byte offset
/// on bad magic, truncation or a count mismatch.
std::vector<LabeledDigit> load_mnist(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path);

/// Inverse of load_mnist: pixels are written as round(255 * p).
void write_mnist(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, const std::vector<LabeledDigit>& digits);

/// First `count` digits taking classes round-robin (0, 1, ..., 9, 0, ...) in
/// file order. Throws DataError if a class runs out.
std::vector<LabeledDigit> class_balanced_subset(const std::vector<LabeledDigit>& digits,
                                                std::size_t count);

}  // namespace insitu::tasks

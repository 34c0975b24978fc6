#include "insitu/tasks/mnist.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "insitu/errors.hpp"

namespace insitu::tasks {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError(path.string() + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void require_size(const std::vector<std::uint8_t>& bytes, std::size_t expected,
                  const std::filesystem::path& path) {
  if (bytes.size() < expected) {
    throw FormatError(path.string() + ": truncated at offset " + std::to_string(bytes.size()) +
                      ", expected " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) {
    throw FormatError(path.string() + ": trailing data at offset " + std::to_string(expected));
  }
}

}  // namespace

std::vector<LabeledDigit> load_mnist(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path) {
  const auto images = slurp(images_path);
  const auto labels = slurp(labels_path);

  if (read_be32(images, 0, images_path) != kImagesMagic) {
    throw FormatError(images_path.string() + ": bad magic at offset 0, expected 0x00000803");
  }
  if (read_be32(labels, 0, labels_path) != kLabelsMagic) {
    throw FormatError(labels_path.string() + ": bad magic at offset 0, expected 0x00000801");
  }
  const std::size_t count = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t label_count = read_be32(labels, 4, labels_path);
  if (rows != kDigitSide || cols != kDigitSide) {
    throw FormatError(images_path.string() + ": expected 28x28 images at offset 8");
  }
  if (count != label_count) {
    throw FormatError("IDX count mismatch: " + std::to_string(count) + " images at offset 4 of " +
                      images_path.string() + " vs " + std::to_string(label_count) + " labels");
  }
  require_size(images, 16 + count * rows * cols, images_path);
  require_size(labels, 8 + count, labels_path);

  std::vector<LabeledDigit> digits(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t base = 16 + n * rows * cols;
    for (std::size_t i = 0; i < rows * cols; ++i) {
      digits[n].pixels[i] = static_cast<double>(images[base + i]) / 255.0;
    }
    const int label = labels[8 + n];
    if (label > 9) {
      throw FormatError(labels_path.string() + ": label " + std::to_string(label) +
                        " out of range at offset " + std::to_string(8 + n));
    }
    digits[n].label = label;
  }
  return digits;
}

void write_mnist(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 const std::vector<LabeledDigit>& digits) {
  std::ofstream images(images_path, std::ios::binary);
  std::ofstream labels(labels_path, std::ios::binary);
  if (!images || !labels) throw FormatError("cannot write IDX files");
  const auto count = static_cast<std::uint32_t>(digits.size());
  put_be32(images, kImagesMagic);
  put_be32(images, count);
  put_be32(images, kDigitSide);
  put_be32(images, kDigitSide);
  put_be32(labels, kLabelsMagic);
  put_be32(labels, count);
  for (const LabeledDigit& d : digits) {
    for (double p : d.pixels) images.put(static_cast<char>(std::lround(p * 255.0)));
    labels.put(static_cast<char>(d.label));
  }
}

std::vector<LabeledDigit> class_balanced_subset(const std::vector<LabeledDigit>& digits,
                                                std::size_t count) {
  std::array<std::vector<std::size_t>, 10> by_class;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    by_class[static_cast<std::size_t>(digits[i].label)].push_back(i);
  }
  std::vector<LabeledDigit> out;
  out.reserve(count);
  std::array<std::size_t, 10> next{};
  while (out.size() < count) {
    const std::size_t c = out.size() % 10;
    if (next[c] >= by_class[c].size()) {
      throw DataError("not enough digits of class " + std::to_string(c) + " for a balanced subset");
    }
    out.push_back(digits[by_class[c][next[c]++]]);
  }
  return out;
}

}  // namespace insitu::tasks

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "insitu/errors.hpp"

namespace insitu::optics {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] constexpr std::size_t size() const { return rows * cols; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape shape);

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Row-major dense 2D array. Thin on purpose: domain invariants live in the
// wrapper types (ComplexField, PhaseMap, IntensityImage).
template <class T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(Shape shape, T fill = T{}) : shape_(shape), values_(shape.size(), fill) {}
  Grid(Shape shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size()) {
      throw DimensionError("grid of " + to_string(shape_) + " given " +
                           std::to_string(values_.size()) + " values");
    }
  }

  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] std::size_t rows() const { return shape_.rows; }
  [[nodiscard]] std::size_t cols() const { return shape_.cols; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] std::span<T> values() { return values_; }
  [[nodiscard]] std::span<const T> values() const { return values_; }
  [[nodiscard]] const std::vector<T>& vector() const { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Shape shape_{};
  std::vector<T> values_;
};

using Complex = std::complex<double>;

void require_same_shape(Shape a, Shape b, const char* what);

}  // namespace insitu::optics

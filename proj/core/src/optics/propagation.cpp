#include "insitu/optics/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "fft.hpp"

namespace insitu::optics {

namespace {

std::size_t wrap_index(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  std::ptrdiff_t r = i % m;
  if (r < 0) r += m;
  return static_cast<std::size_t>(r);
}

double frequency(std::size_t k, std::size_t n, double pitch_um) {
  const auto signed_k = k < n / 2 ? static_cast<double>(k)
                                  : static_cast<double>(k) - static_cast<double>(n);
  return signed_k / (static_cast<double>(n) * pitch_um);
}

}  // namespace

AngularSpectrumPropagator::AngularSpectrumPropagator(Shape shape, double pitch_um,
                                                     double wavelength_um, double distance_mm,
                                                     std::size_t pad_factor)
    : shape_(shape),
      padded_{shape.rows * pad_factor, shape.cols * pad_factor},
      pitch_um_(pitch_um),
      wavelength_um_(wavelength_um),
      distance_mm_(distance_mm) {
  if (!is_power_of_two(shape.rows) || !is_power_of_two(shape.cols)) {
    throw DimensionError("propagator grid must be powers of two, got " + to_string(shape));
  }
  if (pad_factor == 0 || !is_power_of_two(pad_factor)) {
    throw ConfigError("pad factor must be a positive power of two");
  }
  if (!std::isfinite(distance_mm)) throw ConfigError("propagation distance must be finite");
  if (!(pitch_um > 0.0) || !(wavelength_um > 0.0)) {
    throw ConfigError("pitch and wavelength must be positive");
  }

  const double d_um = distance_mm * 1000.0;
  const double inv_lambda_sq = 1.0 / (wavelength_um * wavelength_um);
  const double scale = 1.0 / static_cast<double>(padded_.size());
  transfer_.resize(padded_.size());
  for (std::size_t r = 0; r < padded_.rows; ++r) {
    const double fy = frequency(r, padded_.rows, pitch_um);
    for (std::size_t c = 0; c < padded_.cols; ++c) {
      const double fx = frequency(c, padded_.cols, pitch_um);
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      Complex h{0.0, 0.0};
      if (arg > 0.0) h = std::polar(scale, kTwoPi * d_um * std::sqrt(arg));
      transfer_[r * padded_.cols + c] = h;
    }
  }
  fft_ = std::make_unique<detail::Fft2d>(padded_.rows, padded_.cols);
}

AngularSpectrumPropagator::~AngularSpectrumPropagator() = default;
AngularSpectrumPropagator::AngularSpectrumPropagator(AngularSpectrumPropagator&&) noexcept = default;
AngularSpectrumPropagator& AngularSpectrumPropagator::operator=(AngularSpectrumPropagator&&) noexcept =
    default;

void AngularSpectrumPropagator::check_field(const ComplexField& field) const {
  require_same_shape(field.shape(), shape_, "propagate");
  if (field.pitch_um() != pitch_um_ || field.wavelength_um() != wavelength_um_) {
    throw ConfigError("field pitch/wavelength differ from the propagator's");
  }
}

void AngularSpectrumPropagator::transform(std::span<const Complex> in, std::ptrdiff_t in_row,
                                          std::ptrdiff_t in_col, std::span<Complex> out,
                                          std::ptrdiff_t out_row, std::ptrdiff_t out_col,
                                          bool conjugate) const {
  if (in.size() != shape_.size() || out.size() != shape_.size()) {
    throw DimensionError("propagator buffer size mismatch");
  }
  auto buf = fft_->buffer();
  std::fill(buf.begin(), buf.end(), Complex{});
  for (std::size_t r = 0; r < shape_.rows; ++r) {
    const std::size_t pr = wrap_index(in_row + static_cast<std::ptrdiff_t>(r), padded_.rows);
    for (std::size_t c = 0; c < shape_.cols; ++c) {
      const std::size_t pc = wrap_index(in_col + static_cast<std::ptrdiff_t>(c), padded_.cols);
      buf[pr * padded_.cols + pc] = in[r * shape_.cols + c];
    }
  }
  fft_->forward();
  if (conjugate) {
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= std::conj(transfer_[i]);
  } else {
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= transfer_[i];
  }
  fft_->backward();
  for (std::size_t r = 0; r < shape_.rows; ++r) {
    const std::size_t pr = wrap_index(out_row + static_cast<std::ptrdiff_t>(r), padded_.rows);
    for (std::size_t c = 0; c < shape_.cols; ++c) {
      const std::size_t pc = wrap_index(out_col + static_cast<std::ptrdiff_t>(c), padded_.cols);
      out[r * shape_.cols + c] = buf[pr * padded_.cols + pc];
    }
  }
}

void AngularSpectrumPropagator::propagate_into(std::span<const Complex> in, std::span<Complex> out,
                                               std::ptrdiff_t row_shift,
                                               std::ptrdiff_t col_shift) const {
  if (distance_mm_ == 0.0 && row_shift == 0 && col_shift == 0) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const auto off_r = static_cast<std::ptrdiff_t>((padded_.rows - shape_.rows) / 2);
  const auto off_c = static_cast<std::ptrdiff_t>((padded_.cols - shape_.cols) / 2);
  transform(in, off_r, off_c, out, off_r + row_shift, off_c + col_shift, false);
}

void AngularSpectrumPropagator::adjoint_into(std::span<const Complex> in, std::span<Complex> out,
                                             std::ptrdiff_t row_shift,
                                             std::ptrdiff_t col_shift) const {
  if (distance_mm_ == 0.0 && row_shift == 0 && col_shift == 0) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const auto off_r = static_cast<std::ptrdiff_t>((padded_.rows - shape_.rows) / 2);
  const auto off_c = static_cast<std::ptrdiff_t>((padded_.cols - shape_.cols) / 2);
  transform(in, off_r + row_shift, off_c + col_shift, out, off_r, off_c, true);
}

ComplexField AngularSpectrumPropagator::propagate(const ComplexField& field,
                                                  std::ptrdiff_t row_shift,
                                                  std::ptrdiff_t col_shift) const {
  check_field(field);
  ComplexField out = field;
  propagate_into(field.amplitude().values(), out.mutable_amplitude().values(), row_shift,
                 col_shift);
  return out;
}

ComplexField AngularSpectrumPropagator::adjoint(const ComplexField& field,
                                                std::ptrdiff_t row_shift,
                                                std::ptrdiff_t col_shift) const {
  check_field(field);
  ComplexField out = field;
  adjoint_into(field.amplitude().values(), out.mutable_amplitude().values(), row_shift, col_shift);
  return out;
}

ComplexField propagate(const ComplexField& field, double distance_mm) {
  if (!std::isfinite(distance_mm)) throw ConfigError("propagation distance must be finite");
  if (distance_mm == 0.0) return field;
  using Key = std::tuple<std::size_t, std::size_t, double, double, double>;
  thread_local std::map<Key, AngularSpectrumPropagator> cache;
  const Key key{field.shape().rows, field.shape().cols, field.pitch_um(), field.wavelength_um(),
                distance_mm};
  auto it = cache.find(key);
  if (it == cache.end()) {
    if (cache.size() > 32) cache.clear();
    it = cache
             .emplace(key, AngularSpectrumPropagator(field.shape(), field.pitch_um(),
                                                     field.wavelength_um(), distance_mm))
             .first;
  }
  return it->second(field);
}

}  // namespace insitu::optics

#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "insitu/optics/field.hpp"

namespace insitu::optics {

namespace detail {
class Fft2d;
}

/// Angular-spectrum free-space propagation over a fixed distance.
///
/// The field is zero-padded by `pad_factor` in each dimension, multiplied in
/// the frequency domain by exp(i*2*pi*d*sqrt(1/lambda^2 - fx^2 - fy^2)) with
/// evanescent components zeroed, and cropped back to the input grid. The crop
/// window may be displaced by an integer offset, which models a laterally
/// shifted sensor; the padded domain is periodic.
///
/// One instance owns its FFT buffers, so a single propagator must not be used
/// from two threads at once. Construct one per thread instead.
class AngularSpectrumPropagator {
 public:
  AngularSpectrumPropagator(Shape shape, double pitch_um, double wavelength_um, double distance_mm,
                            std::size_t pad_factor = 2);
  ~AngularSpectrumPropagator();
  AngularSpectrumPropagator(AngularSpectrumPropagator&&) noexcept;
  AngularSpectrumPropagator& operator=(AngularSpectrumPropagator&&) noexcept;

  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] double distance_mm() const { return distance_mm_; }

  [[nodiscard]] ComplexField operator()(const ComplexField& field) const {
    return propagate(field, 0, 0);
  }
  [[nodiscard]] ComplexField propagate(const ComplexField& field, std::ptrdiff_t row_shift,
                                       std::ptrdiff_t col_shift) const;

  /// Exact adjoint of propagate() with the same crop shift. With zero shift
  /// this equals propagation over -distance.
  [[nodiscard]] ComplexField adjoint(const ComplexField& field, std::ptrdiff_t row_shift,
                                     std::ptrdiff_t col_shift) const;

  // Raw-span variants used on hot paths; no validation beyond sizes.
  void propagate_into(std::span<const Complex> in, std::span<Complex> out, std::ptrdiff_t row_shift,
                      std::ptrdiff_t col_shift) const;
  void adjoint_into(std::span<const Complex> in, std::span<Complex> out, std::ptrdiff_t row_shift,
                    std::ptrdiff_t col_shift) const;

 private:
  void transform(std::span<const Complex> in, std::ptrdiff_t in_row, std::ptrdiff_t in_col,
                 std::span<Complex> out, std::ptrdiff_t out_row, std::ptrdiff_t out_col,
                 bool conjugate) const;
  void check_field(const ComplexField& field) const;

  Shape shape_;
  Shape padded_;
  double pitch_um_;
  double wavelength_um_;
  double distance_mm_;
  std::vector<Complex> transfer_;
  std::unique_ptr<detail::Fft2d> fft_;
};

/// One-shot propagation over `distance_mm` with 2x padding. Distance zero
/// returns the input unchanged.
ComplexField propagate(const ComplexField& field, double distance_mm);

}  // namespace insitu::optics

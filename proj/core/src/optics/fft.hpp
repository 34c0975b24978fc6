#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>

namespace insitu::optics::detail {

// In-place 2D complex FFT over an owned, FFTW-aligned buffer. Plans use
// FFTW_ESTIMATE so the chosen algorithm (and therefore every rounding) is the
// same on every run. Not safe for concurrent use of one instance.
class Fft2d {
 public:
  Fft2d(std::size_t rows, std::size_t cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::span<std::complex<double>> buffer() { return {data(), size_}; }
  void forward();
  // Unnormalized inverse; callers fold 1/N into their own scaling.
  void backward();

 private:
  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buffer_); }

  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace insitu::optics::detail

#include "fft.hpp"

#include <mutex>
#include <new>

namespace insitu::optics::detail {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2d::Fft2d(std::size_t rows, std::size_t cols) : size_(rows * cols) {
  std::lock_guard lock(planner_mutex());
  buffer_ = fftw_alloc_complex(size_);
  if (buffer_ == nullptr) throw std::bad_alloc();
  const int r = static_cast<int>(rows);
  const int c = static_cast<int>(cols);
  forward_ = fftw_plan_dft_2d(r, c, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft_2d(r, c, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(backward_);
  fftw_free(buffer_);
}

void Fft2d::forward() { fftw_execute(forward_); }
void Fft2d::backward() { fftw_execute(backward_); }

}  // namespace insitu::optics::detail

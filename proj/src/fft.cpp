#include "weakform/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "weakform/errors.hpp"

namespace weakform {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw ValueError("fft size must be >= 2");
  real_buf_ = fftw_alloc_real(static_cast<std::size_t>(n));
  cplx_buf_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  std::lock_guard<std::mutex> lock(plan_mutex());
  plan_fwd_ = fftw_plan_dft_r2c_1d(n, real_buf_, static_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(cplx_buf_), real_buf_,
                                   FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(real_buf_, in, sizeof(double) * static_cast<std::size_t>(n_));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out, cplx_buf_, sizeof(std::complex<double>) * static_cast<std::size_t>(n_ / 2 + 1));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  std::memcpy(cplx_buf_, in, sizeof(std::complex<double>) * static_cast<std::size_t>(n_ / 2 + 1));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  double scale = 1.0 / static_cast<double>(n_);
  for (int i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  RealFft fft(static_cast<int>(x.size()));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(fft.spectrum_size()));
  fft.forward(x.data(), out.data());
  return out;
}

}  // namespace weakform

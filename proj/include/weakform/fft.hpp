#pragma once

#include <complex>
#include <vector>

namespace weakform {

// Thin FFTW wrapper for repeated 1-D transforms of one size. Plan creation
// is serialized internally (FFTW planning is not thread safe); execution on
// distinct instances is. Plans use FFTW_ESTIMATE so results are reproducible
// run to run.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  // in: n reals; out: n/2+1 complex bins (unnormalized forward DFT).
  void forward(const double* in, std::complex<double>* out);
  // in: n/2+1 complex bins; out: n reals, scaled by 1/n so that
  // inverse(forward(x)) == x.
  void inverse(const std::complex<double>* in, double* out);

 private:
  int n_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  void* cplx_buf_;
};

// One-shot forward transform of a real line.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

}  // namespace weakform

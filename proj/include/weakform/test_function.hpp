#pragma once

#include <memory>

namespace weakform {

enum class FamilyKind {
  PolyBump,
  CinfBump,
  ShinbrotSin,
  TakayaHermite,
  ValeurAsym,
  PatraCas,
};

// Compactly supported test function with analytic derivatives. Instances are
// immutable and cheap to copy. evaluate(k, x) returns the k-th derivative at
// x and is 0 outside [support_lo, support_hi].
//
// boundary_vanish_order() is the number of derivative orders (0, 1, ...,
// order-1) that vanish at both support endpoints; integrating by parts k
// times against the function is exact (no boundary terms) iff
// k <= boundary_vanish_order().
class TestFunction {
 public:
  // (1 - (x/radius)^2)^q on [-radius, radius]; derivatives up to q-1.
  static TestFunction poly_bump(int q, double radius = 1.0);

  // exp(1 - 1/(1 - (x/radius)^2)) on [-radius, radius]; all derivatives
  // vanish at the endpoints. max_derivative picks how many derivative
  // polynomials are precomputed.
  static TestFunction cinf_bump(double radius = 1.0, int max_derivative = 8);

  // sin(omega t)^n on [0, pi/omega]; derivatives up to n-1 vanish at the ends.
  static TestFunction shinbrot_sin(int n, double omega = 1.0);

  // Derivatives of the standard Gaussian: phi^(k)(r) =
  // (-1)^k He_k(r) exp(-r^2/2)/sqrt(2 pi) with probabilists' Hermite
  // polynomials. Support truncated to |r| <= 7.5 where the tail is below
  // 1e-12 of the peak; not compactly supported in the exact sense.
  static TestFunction takaya_hermite(int n);

  // t^alpha (1-t)^beta on [0, 1]; requires alpha, beta > max usable order.
  static TestFunction valeur_asym(double alpha, double beta);

  // (1/window) * sum_j (-1)^j C(n,j) cas(2 (n+k-j) pi t / window) on
  // [0, window], cas(t) = cos t + sin t. Binomial cancellation makes
  // derivatives up to n-1 vanish at the ends.
  static TestFunction patra_cas(int n, int k, double window = 1.0);

  double evaluate(int order, double x) const;
  double support_lo() const;
  double support_hi() const;
  int max_derivative() const;
  int boundary_vanish_order() const;
  FamilyKind kind() const;

  struct Impl;

 private:
  explicit TestFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace weakform

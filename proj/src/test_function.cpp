#include "weakform/test_function.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "weakform/errors.hpp"

namespace weakform {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Dense polynomial with ascending coefficients; just enough arithmetic for
// the derivative recurrences below.
using Poly = std::vector<double>;

Poly derive(const Poly& p) {
  if (p.size() <= 1) return {0.0};
  Poly d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * static_cast<double>(i);
  return d;
}

Poly mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly scale(Poly p, double s) {
  for (double& c : p) c *= s;
  return p;
}

double horner(const Poly& p, double x) {
  double acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

double binomial(int n, int j) {
  double r = 1.0;
  for (int i = 1; i <= j; ++i) r = r * static_cast<double>(n - j + i) / static_cast<double>(i);
  return r;
}

}  // namespace

struct TestFunction::Impl {
  FamilyKind kind;
  double lo = 0.0, hi = 0.0;
  int max_derivative = 0;
  int boundary_vanish = 0;
  virtual ~Impl() = default;
  virtual double eval(int order, double x) const = 0;
};

namespace {

struct PolyBumpImpl final : TestFunction::Impl {
  int q;
  double radius;
  // phi^(k)(x) = radius^-k  P_k(y) (1-y^2)^(q-k), y = x/radius, with
  // P_{k+1} = P_k' (1-y^2) - 2 (q-k) y P_k.
  std::vector<Poly> pk;

  PolyBumpImpl(int q_, double radius_) : q(q_), radius(radius_) {
    kind = FamilyKind::PolyBump;
    lo = -radius;
    hi = radius;
    max_derivative = q - 1;
    boundary_vanish = q;
    pk.push_back({1.0});
    const Poly one_minus_y2 = {1.0, 0.0, -1.0};
    for (int k = 0; k < max_derivative; ++k) {
      Poly next = add(mul(derive(pk.back()), one_minus_y2),
                      scale(mul({0.0, 1.0}, pk.back()), -2.0 * static_cast<double>(q - k)));
      pk.push_back(std::move(next));
    }
  }

  double eval(int order, double x) const override {
    double y = x / radius;
    double t = 1.0 - y * y;
    if (t <= 0.0) return 0.0;
    return horner(pk[order], y) * std::pow(t, q - order) / std::pow(radius, order);
  }
};

struct CinfBumpImpl final : TestFunction::Impl {
  double radius;
  // d^k/dy^k exp(1 - 1/(1-y^2)) = g(y) P_k(y) (1-y^2)^(-2k) with
  // P_{k+1} = P_k' (1-y^2)^2 + 4 k y P_k (1-y^2) - 2 y P_k.
  std::vector<Poly> pk;

  CinfBumpImpl(double radius_, int max_der) : radius(radius_) {
    kind = FamilyKind::CinfBump;
    lo = -radius;
    hi = radius;
    max_derivative = max_der;
    boundary_vanish = std::numeric_limits<int>::max();
    pk.push_back({1.0});
    const Poly one_minus_y2 = {1.0, 0.0, -1.0};
    const Poly y = {0.0, 1.0};
    const Poly om2 = mul(one_minus_y2, one_minus_y2);
    for (int k = 0; k < max_der; ++k) {
      Poly next = mul(derive(pk.back()), om2);
      next = add(next, scale(mul(y, mul(pk.back(), one_minus_y2)), 4.0 * static_cast<double>(k)));
      next = add(next, scale(mul(y, pk.back()), -2.0));
      pk.push_back(std::move(next));
    }
  }

  double eval(int order, double x) const override {
    double yv = x / radius;
    double t = 1.0 - yv * yv;
    // Below this the exponential underflows anyway; avoids 0 * inf.
    if (t < 1.0 / 700.0) return 0.0;
    double g = std::exp(1.0 - 1.0 / t);
    return horner(pk[order], yv) * g / (std::pow(t, 2 * order) * std::pow(radius, order));
  }
};

// Real part of a sum of complex exponentials; covers both the sin^n window
// and the cas-harmonic window, with term-by-term analytic derivatives.
struct ExpSumImpl final : TestFunction::Impl {
  std::vector<std::complex<double>> coeff;
  std::vector<double> freq;

  double eval(int order, double x) const override {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t m = 0; m < coeff.size(); ++m) {
      std::complex<double> iw(0.0, freq[m]);
      acc += coeff[m] * std::pow(iw, order) * std::exp(std::complex<double>(0.0, freq[m] * x));
    }
    return acc.real();
  }
};

struct TakayaImpl final : TestFunction::Impl {
  static constexpr double kCut = 7.5;

  TakayaImpl(int n) {
    kind = FamilyKind::TakayaHermite;
    lo = -kCut;
    hi = kCut;
    max_derivative = n;
    boundary_vanish = 0;  // truncated tails, not exactly zero
  }

  double eval(int order, double r) const override {
    // (-1)^k He_k(r) exp(-r^2/2) / sqrt(2 pi), probabilists' Hermite.
    double hk = 1.0, hkm1 = 0.0;
    for (int j = 0; j < order; ++j) {
      double next = r * hk - static_cast<double>(j) * hkm1;
      hkm1 = hk;
      hk = next;
    }
    double sign = (order % 2 == 0) ? 1.0 : -1.0;
    return sign * hk * std::exp(-0.5 * r * r) / std::sqrt(2.0 * kPi);
  }
};

struct ValeurImpl final : TestFunction::Impl {
  double alpha, beta;

  ValeurImpl(double a, double b) : alpha(a), beta(b) {
    kind = FamilyKind::ValeurAsym;
    lo = 0.0;
    hi = 1.0;
    max_derivative = static_cast<int>(std::ceil(std::min(a, b))) - 1;
    boundary_vanish = max_derivative + 1;
  }

  static double falling(double a, int i) {
    double r = 1.0;
    for (int j = 0; j < i; ++j) r *= a - static_cast<double>(j);
    return r;
  }

  double eval(int order, double t) const override {
    if (t < 0.0 || t > 1.0) return 0.0;
    // Leibniz over d^i t^alpha * d^(k-i) (1-t)^beta.
    double acc = 0.0;
    for (int i = 0; i <= order; ++i) {
      int j = order - i;
      double left = (t == 0.0 && alpha - i > 0.0) ? 0.0 : std::pow(t, alpha - i);
      double right = (t == 1.0 && beta - j > 0.0) ? 0.0 : std::pow(1.0 - t, beta - j);
      double sign = (j % 2 == 0) ? 1.0 : -1.0;
      acc += binomial(order, i) * falling(alpha, i) * left * sign * falling(beta, j) * right;
    }
    return acc;
  }
};

}  // namespace

TestFunction TestFunction::poly_bump(int q, double radius) {
  if (q < 1) throw ValueError("poly_bump: q must be >= 1");
  if (!(radius > 0.0)) throw ValueError("poly_bump: radius must be > 0");
  return TestFunction(std::make_shared<PolyBumpImpl>(q, radius));
}

TestFunction TestFunction::cinf_bump(double radius, int max_derivative) {
  if (!(radius > 0.0)) throw ValueError("cinf_bump: radius must be > 0");
  if (max_derivative < 0 || max_derivative > 12)
    throw ValueError("cinf_bump: max_derivative out of range [0,12]");
  return TestFunction(std::make_shared<CinfBumpImpl>(radius, max_derivative));
}

TestFunction TestFunction::shinbrot_sin(int n, double omega) {
  if (n < 1) throw ValueError("shinbrot_sin: n must be >= 1");
  if (!(omega > 0.0)) throw ValueError("shinbrot_sin: omega must be > 0");
  auto impl = std::make_shared<ExpSumImpl>();
  impl->kind = FamilyKind::ShinbrotSin;
  impl->lo = 0.0;
  impl->hi = kPi / omega;
  impl->max_derivative = std::max(n - 1, 2 * n);  // evaluable beyond ibp validity
  impl->boundary_vanish = n;
  // sin^n(wt) = (2i)^-n sum_j C(n,j) (-1)^(n-j) e^(i w (2j-n) t)
  std::complex<double> inv2i = 1.0 / std::complex<double>(0.0, 2.0);
  std::complex<double> base = std::pow(inv2i, n);
  for (int j = 0; j <= n; ++j) {
    double sign = ((n - j) % 2 == 0) ? 1.0 : -1.0;
    impl->coeff.push_back(base * binomial(n, j) * sign);
    impl->freq.push_back(omega * static_cast<double>(2 * j - n));
  }
  return TestFunction(std::move(impl));
}

TestFunction TestFunction::takaya_hermite(int n) {
  if (n < 0 || n > 16) throw ValueError("takaya_hermite: n out of range [0,16]");
  return TestFunction(std::make_shared<TakayaImpl>(n));
}

TestFunction TestFunction::valeur_asym(double alpha, double beta) {
  if (!(alpha > 1.0) || !(beta > 1.0))
    throw ValueError("valeur_asym: alpha and beta must be > 1");
  return TestFunction(std::make_shared<ValeurImpl>(alpha, beta));
}

TestFunction TestFunction::patra_cas(int n, int k, double window) {
  if (n < 1) throw ValueError("patra_cas: n must be >= 1");
  if (k < 1) throw ValueError("patra_cas: k must be >= 1");
  if (!(window > 0.0)) throw ValueError("patra_cas: window must be > 0");
  auto impl = std::make_shared<ExpSumImpl>();
  impl->kind = FamilyKind::PatraCas;
  impl->lo = 0.0;
  impl->hi = window;
  impl->max_derivative = 12;
  impl->boundary_vanish = n;
  // cas(t) = cos t + sin t = Re[(1 - i) e^(it)]
  const std::complex<double> cas_coeff(1.0, -1.0);
  for (int j = 0; j <= n; ++j) {
    double sign = (j % 2 == 0) ? 1.0 : -1.0;
    impl->coeff.push_back(cas_coeff * (sign * binomial(n, j) / window));
    impl->freq.push_back(2.0 * kPi * static_cast<double>(n + k - j) / window);
  }
  return TestFunction(std::move(impl));
}

double TestFunction::evaluate(int order, double x) const {
  if (order < 0 || order > impl_->max_derivative)
    throw ValueError("test function derivative order " + std::to_string(order) +
                     " out of range [0," + std::to_string(impl_->max_derivative) + "]");
  if (x < impl_->lo || x > impl_->hi) return 0.0;
  return impl_->eval(order, x);
}

double TestFunction::support_lo() const { return impl_->lo; }
double TestFunction::support_hi() const { return impl_->hi; }
int TestFunction::max_derivative() const { return impl_->max_derivative; }
int TestFunction::boundary_vanish_order() const { return impl_->boundary_vanish; }
FamilyKind TestFunction::kind() const { return impl_->kind; }

}  // namespace weakform

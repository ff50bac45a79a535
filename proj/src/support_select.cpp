#include "weakform/support_select.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>

#include "weakform/errors.hpp"
#include "weakform/fft.hpp"
#include "weakform/ndarray.hpp"
#include "weakform/stencil.hpp"

namespace weakform {

std::vector<double> averaged_power_spectrum(const Dataset& d, int axis) {
  if (axis < 0 || axis >= d.grid().ndim()) throw ValueError("spectrum: axis out of range");
  std::int64_t n = d.grid().axis_size(axis);
  std::vector<std::int64_t> dims;
  for (int a = 0; a < d.grid().ndim(); ++a) dims.push_back(d.grid().axis_size(a));
  dims.push_back(d.components());

  RealFft fft(static_cast<int>(n));
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.spectrum_size()));
  std::vector<double> power(spec.size(), 0.0);
  std::int64_t lines = 0;
  const double* v = d.values().data();
  for_each_line(dims, axis, [&](std::int64_t base, std::int64_t stride) {
    for (std::int64_t i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = v[base + i * stride];
    fft.forward(line.data(), spec.data());
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] += std::norm(spec[k]);
    ++lines;
  });
  double inv = 1.0 / (static_cast<double>(lines) * static_cast<double>(n));
  for (double& p : power) p *= inv;
  return power;
}

namespace {

// Continuous two-piece linear least squares of y over x with the knot at
// index c; returns the residual sum of squares and the two slopes.
struct TwoPieceFit {
  double rss = 0.0;
  double slope1 = 0.0;
  double slope2 = 0.0;
};

TwoPieceFit fit_two_piece(const std::vector<double>& y, int c) {
  // Basis: 1, min(x, x_c), max(x - x_c, 0) with x = 0..M-1.
  int m = static_cast<int>(y.size());
  double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
  double r0 = 0, r1 = 0, r2 = 0;
  for (int i = 0; i < m; ++i) {
    double b1 = static_cast<double>(std::min(i, c));
    double b2 = static_cast<double>(std::max(i - c, 0));
    a00 += 1.0;
    a01 += b1;
    a02 += b2;
    a11 += b1 * b1;
    a12 += b1 * b2;
    a22 += b2 * b2;
    r0 += y[static_cast<std::size_t>(i)];
    r1 += y[static_cast<std::size_t>(i)] * b1;
    r2 += y[static_cast<std::size_t>(i)] * b2;
  }
  // 3x3 normal equations by Cramer's rule.
  double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
               a02 * (a01 * a12 - a11 * a02);
  TwoPieceFit out;
  if (std::abs(det) < 1e-300) {
    out.rss = std::numeric_limits<double>::infinity();
    return out;
  }
  double c0 = (r0 * (a11 * a22 - a12 * a12) - a01 * (r1 * a22 - a12 * r2) +
               a02 * (r1 * a12 - a11 * r2)) /
              det;
  double c1 = (a00 * (r1 * a22 - r2 * a12) - r0 * (a01 * a22 - a12 * a02) +
               a02 * (a01 * r2 - r1 * a02)) /
              det;
  double c2 = (a00 * (a11 * r2 - r1 * a12) - a01 * (a01 * r2 - r1 * a02) +
               r0 * (a01 * a12 - a11 * a02)) /
              det;
  for (int i = 0; i < m; ++i) {
    double b1 = static_cast<double>(std::min(i, c));
    double b2 = static_cast<double>(std::max(i - c, 0));
    double e = y[static_cast<std::size_t>(i)] - (c0 + c1 * b1 + c2 * b2);
    out.rss += e * e;
  }
  out.slope1 = c1;
  out.slope2 = c2;
  return out;
}

// |DTFT of the order-0 window| at data wavenumber k (bins of an n-point
// axis), and its peak over all one-sided bins.
double window_attenuation(const Stencil& st, std::int64_t n, int k_star) {
  const std::vector<double>& w = st.weights[0];
  auto mag_at = [&](int k) {
    double re = 0.0, im = 0.0;
    double base = -2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(n);
    for (std::size_t i = 0; i < w.size(); ++i) {
      double a = base * static_cast<double>(i);
      re += w[i] * std::cos(a);
      im += w[i] * std::sin(a);
    }
    return std::hypot(re, im);
  };
  double peak = 0.0;
  for (int k = 0; k <= static_cast<int>(n / 2); ++k) peak = std::max(peak, mag_at(k));
  if (peak == 0.0) return 0.0;
  return mag_at(k_star) / peak;
}

}  // namespace

SupportSelection select_support(const Dataset& d, int axis, const SupportSelectOptions& opt) {
  std::int64_t n = d.grid().axis_size(axis);
  if (n < 16) throw ValueError("select_support: axis must have >= 16 points");
  int k_max = opt.max_order;
  if (k_max < 0) throw ValueError("select_support: max_order must be >= 0");

  int lo_clamp = opt.min_radius > 0 ? opt.min_radius : k_max + 1;
  int hi_clamp = opt.max_radius > 0 ? opt.max_radius : static_cast<int>(n / 2 - 1);
  hi_clamp = std::min<int>(hi_clamp, static_cast<int>(n / 2 - 1));
  lo_clamp = std::max(lo_clamp, std::max(k_max, 1));
  if (lo_clamp > hi_clamp) lo_clamp = hi_clamp;

  TestFunction family =
      opt.family.has_value() ? *opt.family : TestFunction::poly_bump(k_max + 3);

  std::vector<double> power = averaged_power_spectrum(d, axis);
  int m_half = static_cast<int>(n / 2);

  // Constant data has no non-DC spectrum at all.
  double peak_ac = 0.0;
  for (int k = 1; k <= m_half; ++k) peak_ac = std::max(peak_ac, power[static_cast<std::size_t>(k)]);
  if (peak_ac <= 0.0 || peak_ac <= 1e-28 * power[0])
    return {lo_clamp, 0, true};

  // Numerically clean data: the upper half-band holds round-off power only,
  // there is no noise floor to filter, and the changepoint fit would see a
  // one-bin signal band it cannot resolve. Use the narrowest admissible
  // window; report the band edge where power falls below 1e-8 of the peak.
  {
    std::vector<double> upper(power.begin() + m_half / 2, power.begin() + m_half + 1);
    std::nth_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2),
                     upper.end());
    double floor_med = upper[upper.size() / 2];
    if (floor_med <= 1e-20 * peak_ac) {
      int k_edge = 1;
      for (int k = m_half; k >= 1; --k)
        if (power[static_cast<std::size_t>(k)] > 1e-8 * peak_ac) {
          k_edge = k;
          break;
        }
      return {lo_clamp, k_edge, false};
    }
  }

  // Cumulative log-spectrum over k = 1..n/2 (DC excluded; multiplicative data
  // scaling shifts log-power by a constant, which the two-piece fit absorbs).
  std::vector<double> logp;
  logp.reserve(static_cast<std::size_t>(m_half));
  double floor_p = peak_ac * 1e-280;
  for (int k = 1; k <= m_half; ++k)
    logp.push_back(std::log(power[static_cast<std::size_t>(k)] + floor_p));
  std::vector<double> cum(logp.size());
  std::partial_sum(logp.begin(), logp.end(), cum.begin());

  int best_c = 1;
  double best_rss = std::numeric_limits<double>::infinity();
  TwoPieceFit best_fit;
  for (int c = 1; c + 1 < static_cast<int>(cum.size()); ++c) {
    TwoPieceFit f = fit_two_piece(cum, c);
    if (f.rss < best_rss) {
      best_rss = f.rss;
      best_c = c;
      best_fit = f;
    }
  }

  // A real corner separates a steep signal band from a flatter noise floor;
  // if both slopes agree to within the log-power scatter there is no signal
  // band and the whole spectrum is treated as noise.
  double mean_lp = std::accumulate(logp.begin(), logp.end(), 0.0) / static_cast<double>(logp.size());
  double var_lp = 0.0;
  for (double v : logp) var_lp += (v - mean_lp) * (v - mean_lp);
  double sd_lp = std::sqrt(var_lp / static_cast<double>(logp.size()));
  bool no_corner = std::abs(best_fit.slope1 - best_fit.slope2) <= 0.5 * std::max(sd_lp, 1e-12);

  int k_star = no_corner ? 1 : best_c + 1;  // cum index i holds wavenumber i+1

  double spacing = d.grid().spacing(axis);
  for (int m = lo_clamp; m <= hi_clamp; ++m) {
    Stencil st = discretize(family, spacing, m, 0);
    if (window_attenuation(st, n, k_star) <= opt.attenuation)
      return {m, k_star, false};
  }
  return {hi_clamp, k_star, false};
}

}  // namespace weakform

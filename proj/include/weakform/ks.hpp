#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "weakform/dataset.hpp"

namespace weakform {

// Periodic pseudospectral setup for u_t = c1 d/dx(u^2) + c2 u_xx + c4 u_xxxx
// on [0, length). The canonical Kuramoto-Sivashinsky equation
// u_t = -u u_x - u_xx - u_xxxx is coeffs = (-0.5, -1, -1).
struct KsConfig {
  std::int64_t n = 256;          // spatial points, power of two
  double length = 100.53096491487338;  // 32*pi
  double t_end = 150.0;
  std::int64_t saves = 301;      // save times incl. t = 0
  double dt = 0.125;             // internal step (rounded to divide the save interval)
  double coeffs[3] = {-0.5, -1.0, -1.0};
};

// Fourth-order exponential time differencing (contour-integral coefficients)
// with 2/3-rule dealiasing of the quadratic term. The returned grid is
// (x, t) with x_hi = length*(n-1)/n, the last sample of the periodic cell.
// Throws ValueError for a non-power-of-two grid, NumericError on blow-up.
Dataset integrate_ks(std::span<const double> u0, const KsConfig& cfg);

// Band-limited random initial data: a few low-frequency Fourier modes with
// seeded Gaussian amplitudes, RMS of order one.
std::vector<double> ks_random_initial(std::int64_t n, double length, std::uint64_t seed);

}  // namespace weakform

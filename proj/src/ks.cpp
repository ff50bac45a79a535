#include "weakform/ks.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "weakform/errors.hpp"
#include "weakform/fft.hpp"
#include "weakform/rng.hpp"

namespace weakform {

namespace {

bool power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Dataset integrate_ks(std::span<const double> u0, const KsConfig& cfg) {
  if (!power_of_two(cfg.n))
    throw ValueError("integrate_ks: grid size must be a power of two");
  if (cfg.n < 16) throw ValueError("integrate_ks: grid too small");
  if (static_cast<std::int64_t>(u0.size()) != cfg.n)
    throw ValueError("integrate_ks: initial data size does not match the grid");
  if (!(cfg.length > 0.0)) throw ValueError("integrate_ks: domain length must be positive");
  if (cfg.saves < 2) throw ValueError("integrate_ks: need at least two save times");
  if (!(cfg.t_end > 0.0)) throw ValueError("integrate_ks: end time must be positive");
  if (!(cfg.dt > 0.0)) throw ValueError("integrate_ks: internal step must be positive");

  const std::int64_t n = cfg.n;
  const int nb = static_cast<int>(n / 2 + 1);
  const double save_dt = cfg.t_end / static_cast<double>(cfg.saves - 1);
  const std::int64_t sub = std::max<std::int64_t>(1, std::llround(save_dt / cfg.dt));
  const double h = save_dt / static_cast<double>(sub);

  RealFft fft(static_cast<int>(n));
  using cd = std::complex<double>;

  // Linear symbol and quadratic-term derivative factor per one-sided bin.
  std::vector<double> lin(static_cast<std::size_t>(nb));
  std::vector<cd> dfac(static_cast<std::size_t>(nb));
  std::vector<double> dealias(static_cast<std::size_t>(nb));
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k < nb; ++k) {
    const double kap = two_pi * static_cast<double>(k) / cfg.length;
    lin[static_cast<std::size_t>(k)] =
        -cfg.coeffs[1] * kap * kap + cfg.coeffs[2] * kap * kap * kap * kap;
    dfac[static_cast<std::size_t>(k)] = cd(0.0, kap) * cfg.coeffs[0];
    dealias[static_cast<std::size_t>(k)] =
        static_cast<double>(k) <= static_cast<double>(n) / 3.0 ? 1.0 : 0.0;
  }

  // ETDRK4 coefficient functions evaluated by averaging over a contour of
  // radius 1 around each h*lin value (stable for z near 0).
  constexpr int M = 32;
  std::vector<double> E(static_cast<std::size_t>(nb)), E2(static_cast<std::size_t>(nb)),
      Qc(static_cast<std::size_t>(nb)), f1(static_cast<std::size_t>(nb)),
      f2(static_cast<std::size_t>(nb)), f3(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    const double z0 = h * lin[static_cast<std::size_t>(k)];
    E[static_cast<std::size_t>(k)] = std::exp(z0);
    E2[static_cast<std::size_t>(k)] = std::exp(0.5 * z0);
    cd q(0.0), a1(0.0), a2(0.0), a3(0.0);
    for (int m = 0; m < M; ++m) {
      const cd z = z0 + std::exp(cd(0.0, std::numbers::pi * (m + 0.5) / M));
      const cd ez = std::exp(z);
      q += (std::exp(0.5 * z) - 1.0) / z;
      a1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / (z * z * z);
      a2 += (2.0 + z + ez * (-2.0 + z)) / (z * z * z);
      a3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / (z * z * z);
    }
    Qc[static_cast<std::size_t>(k)] = h * q.real() / M;
    f1[static_cast<std::size_t>(k)] = h * a1.real() / M;
    f2[static_cast<std::size_t>(k)] = h * a2.real() / M;
    f3[static_cast<std::size_t>(k)] = h * a3.real() / M;
  }

  std::vector<double> phys(static_cast<std::size_t>(n));
  std::vector<cd> v(static_cast<std::size_t>(nb));
  for (std::int64_t i = 0; i < n; ++i) phys[static_cast<std::size_t>(i)] = u0[static_cast<std::size_t>(i)];
  fft.forward(phys.data(), v.data());

  std::vector<cd> nl(static_cast<std::size_t>(nb));
  auto nonlinear = [&](const std::vector<cd>& vin, std::vector<cd>& out) {
    for (int k = 0; k < nb; ++k)
      nl[static_cast<std::size_t>(k)] =
          vin[static_cast<std::size_t>(k)] * dealias[static_cast<std::size_t>(k)];
    fft.inverse(nl.data(), phys.data());
    for (std::int64_t i = 0; i < n; ++i)
      phys[static_cast<std::size_t>(i)] *= phys[static_cast<std::size_t>(i)];
    fft.forward(phys.data(), out.data());
    for (int k = 0; k < nb; ++k)
      out[static_cast<std::size_t>(k)] *=
          dfac[static_cast<std::size_t>(k)] * dealias[static_cast<std::size_t>(k)];
  };

  std::vector<cd> Nv(static_cast<std::size_t>(nb)), Na(static_cast<std::size_t>(nb)),
      Nb(static_cast<std::size_t>(nb)), Nc(static_cast<std::size_t>(nb)),
      av(static_cast<std::size_t>(nb)), bv(static_cast<std::size_t>(nb)),
      cv(static_cast<std::size_t>(nb));

  std::vector<double> values(static_cast<std::size_t>(n * cfg.saves));
  auto record = [&](std::int64_t s) {
    fft.inverse(v.data(), phys.data());
    for (std::int64_t i = 0; i < n; ++i) {
      const double u = phys[static_cast<std::size_t>(i)];
      if (!std::isfinite(u))
        throw NumericError("integrate_ks: solution blew up at save index " + std::to_string(s));
      values[static_cast<std::size_t>(i * cfg.saves + s)] = u;
    }
  };

  record(0);
  for (std::int64_t s = 1; s < cfg.saves; ++s) {
    for (std::int64_t step = 0; step < sub; ++step) {
      nonlinear(v, Nv);
      for (int k = 0; k < nb; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        av[i] = E2[i] * v[i] + Qc[i] * Nv[i];
      }
      nonlinear(av, Na);
      for (int k = 0; k < nb; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        bv[i] = E2[i] * v[i] + Qc[i] * Na[i];
      }
      nonlinear(bv, Nb);
      for (int k = 0; k < nb; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        cv[i] = E2[i] * av[i] + Qc[i] * (2.0 * Nb[i] - Nv[i]);
      }
      nonlinear(cv, Nc);
      for (int k = 0; k < nb; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        v[i] = E[i] * v[i] + f1[i] * Nv[i] + 2.0 * f2[i] * (Na[i] + Nb[i]) + f3[i] * Nc[i];
      }
    }
    record(s);
  }

  const Axis x{n, 0.0, cfg.length * static_cast<double>(n - 1) / static_cast<double>(n)};
  const Axis t{cfg.saves, 0.0, cfg.t_end};
  return Dataset(make_grid({x, t}), 1, std::move(values));
}

std::vector<double> ks_random_initial(std::int64_t n, double length, std::uint64_t seed) {
  if (n < 4) throw ValueError("ks_random_initial: grid too small");
  if (!(length > 0.0)) throw ValueError("ks_random_initial: length must be positive");
  Rng rng(seed);
  constexpr int kModes = 4;
  std::vector<double> amp(kModes), phase(kModes);
  for (int m = 0; m < kModes; ++m) {
    amp[static_cast<std::size_t>(m)] = rng.normal() / std::sqrt(static_cast<double>(m + 1));
    phase[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * rng.uniform01();
  }
  std::vector<double> u(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = length * static_cast<double>(i) / static_cast<double>(n);
    double s = 0.0;
    for (int m = 0; m < kModes; ++m)
      s += amp[static_cast<std::size_t>(m)] *
           std::cos(2.0 * std::numbers::pi * (m + 1) * x / length +
                    phase[static_cast<std::size_t>(m)]);
    u[static_cast<std::size_t>(i)] = s;
  }
  return u;
}

}  // namespace weakform

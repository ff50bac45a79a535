#include "weakform/density_pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "weakform/errors.hpp"

namespace weakform {

namespace {

// Second-order central-difference weights for d^k/dx^k, offsets -2..2.
const double* fd_weights(int k) {
  static const double w0[5] = {0, 0, 1, 0, 0};
  static const double w1[5] = {0, -0.5, 0, 0.5, 0};
  static const double w2[5] = {0, 1, -2, 1, 0};
  static const double w3[5] = {-0.5, 1, 0, -1, 0.5};
  static const double w4[5] = {1, -4, 6, -4, 1};
  switch (k) {
    case 0: return w0;
    case 1: return w1;
    case 2: return w2;
    case 3: return w3;
    case 4: return w4;
    default: throw ValueError("solve_density_pde: derivative order above 4 not supported");
  }
}

}  // namespace

Dataset solve_density_pde(const FeatureLibrary& lib, const Eigen::VectorXd& coeffs,
                          std::span<const double> p0, const Axis& x_axis,
                          const Axis& t_axis) {
  if (lib.components() != 1 || lib.spatial_dims() != 1)
    throw ValueError("solve_density_pde: needs a single-component, one-axis library");
  if (coeffs.size() != lib.size())
    throw ValueError("solve_density_pde: coefficient count does not match the library");
  if (static_cast<std::int64_t>(p0.size()) != x_axis.n)
    throw ValueError("solve_density_pde: initial density does not match the grid");
  if (t_axis.n < 2) throw ValueError("solve_density_pde: need at least two save times");

  const std::int64_t n = x_axis.n;
  const double dx = x_axis.spacing();
  const double save_dt = t_axis.spacing();

  struct Active {
    const Term* term;
    double w;
    int k;
    double hfac;  // 1/dx^k
  };
  std::vector<Active> active;
  double rate = 0.0;  // crude spectral-radius bound for the step size
  for (int j = 0; j < lib.size(); ++j) {
    if (coeffs[j] == 0.0) continue;
    const Term& t = lib.term(j);
    const int k = t.derivative.empty() ? 0 : t.derivative[0];
    active.push_back({&t, coeffs[j], k, std::pow(dx, -k)});
    rate += std::abs(coeffs[j]) * std::pow(2.0 / dx, k);
  }
  const double dt_stable = rate > 0.0 ? 1.0 / rate : save_dt;
  const std::int64_t sub =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(save_dt / dt_stable)));
  const double dt = save_dt / static_cast<double>(sub);

  std::vector<double> xs(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    xs[static_cast<std::size_t>(i)] = x_axis.lo + static_cast<double>(i) * dx;

  std::vector<double> field(static_cast<std::size_t>(n));
  auto rhs = [&](const std::vector<double>& p, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const Active& a : active) {
      for (std::int64_t i = 0; i < n; ++i) {
        const std::span<const double> u(&p[static_cast<std::size_t>(i)], 1);
        const std::span<const double> x(&xs[static_cast<std::size_t>(i)], 1);
        field[static_cast<std::size_t>(i)] = a.term->eval(u, x);
      }
      const double* w = fd_weights(a.k);
      for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int o = -2; o <= 2; ++o) {
          const double c = w[o + 2];
          if (c == 0.0) continue;
          const std::int64_t m = i + o;
          if (m >= 0 && m < n) acc += c * field[static_cast<std::size_t>(m)];
        }
        out[static_cast<std::size_t>(i)] += a.w * a.hfac * acc;
      }
    }
  };

  std::vector<double> p(p0.begin(), p0.end());
  std::vector<double> k1(static_cast<std::size_t>(n)), k2(k1), k3(k1), k4(k1),
      tmp(k1);
  std::vector<double> values(static_cast<std::size_t>(n * t_axis.n));
  auto record = [&](std::int64_t s) {
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = p[static_cast<std::size_t>(i)];
      if (!std::isfinite(v))
        throw NumericError("solve_density_pde: solution blew up at save index " +
                           std::to_string(s));
      values[static_cast<std::size_t>(i * t_axis.n + s)] = v;
    }
  };

  record(0);
  for (std::int64_t s = 1; s < t_axis.n; ++s) {
    for (std::int64_t step = 0; step < sub; ++step) {
      rhs(p, k1);
      for (std::int64_t i = 0; i < n; ++i)
        tmp[static_cast<std::size_t>(i)] =
            p[static_cast<std::size_t>(i)] + 0.5 * dt * k1[static_cast<std::size_t>(i)];
      rhs(tmp, k2);
      for (std::int64_t i = 0; i < n; ++i)
        tmp[static_cast<std::size_t>(i)] =
            p[static_cast<std::size_t>(i)] + 0.5 * dt * k2[static_cast<std::size_t>(i)];
      rhs(tmp, k3);
      for (std::int64_t i = 0; i < n; ++i)
        tmp[static_cast<std::size_t>(i)] =
            p[static_cast<std::size_t>(i)] + dt * k3[static_cast<std::size_t>(i)];
      rhs(tmp, k4);
      for (std::int64_t i = 0; i < n; ++i)
        p[static_cast<std::size_t>(i)] +=
            dt / 6.0 *
            (k1[static_cast<std::size_t>(i)] + 2.0 * k2[static_cast<std::size_t>(i)] +
             2.0 * k3[static_cast<std::size_t>(i)] + k4[static_cast<std::size_t>(i)]);
    }
    record(s);
  }
  return Dataset(make_grid({x_axis, t_axis}), 1, std::move(values));
}

double density_l1_error(const Dataset& a, const Dataset& b) {
  if (a.grid() != b.grid() || a.components() != b.components())
    throw ValueError("density_l1_error: datasets live on different grids");
  if (a.grid().ndim() != 2) throw ValueError("density_l1_error: expected (x, t) data");
  const std::int64_t nt = a.grid().axis_size(1);
  const double dx = a.grid().spacing(0);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    acc += std::abs(a.values()[i] - b.values()[i]);
  return acc * dx / static_cast<double>(nt);
}

}  // namespace weakform

#include "weakform/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "weakform/errors.hpp"

namespace weakform {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ValueError("nelder_mead: empty parameter vector");
  if (!x0.allFinite()) throw ValueError("nelder_mead: initial guess must be finite");
  if (opt.max_evaluations < n + 1)
    throw ValueError("nelder_mead: evaluation budget smaller than one simplex");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fs(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) {
    double step = opt.initial_step * std::abs(x0[i]);
    if (step == 0.0) step = opt.initial_step;
    xs[static_cast<std::size_t>(i) + 1][i] += step;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = eval(xs[i]);

  std::vector<std::size_t> order(xs.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
  };

  while (true) {
    sort_simplex();
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];
    res.history.push_back(fs[best]);

    if (std::isfinite(fs[best])) {
      double diam = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i)
        diam = std::max(diam, (xs[i] - xs[best]).lpNorm<Eigen::Infinity>());
      const double spread =
          std::isfinite(fs[worst]) ? fs[worst] - fs[best] : kInf;
      if (diam <= opt.xtol * (1.0 + xs[best].lpNorm<Eigen::Infinity>()) &&
          spread <= opt.ftol * (1.0 + std::abs(fs[best]))) {
        res.converged = true;
        break;
      }
    }
    if (res.evaluations >= opt.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < order.size() - 1; ++i) centroid += xs[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
    const double fr = eval(xr);
    if (fr < fs[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      const Eigen::VectorXd base = outside ? xr : xs[worst];
      const Eigen::VectorXd xc = centroid + 0.5 * (base - centroid);
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        for (std::size_t i = 1; i < order.size(); ++i) {
          xs[order[i]] = xs[best] + 0.5 * (xs[order[i]] - xs[best]);
          fs[order[i]] = eval(xs[order[i]]);
        }
      }
    }
  }

  sort_simplex();
  const std::size_t best = order.front();
  if (!std::isfinite(fs[best]))
    throw NumericError("nelder_mead: every objective evaluation failed");
  res.x = xs[best];
  res.value = fs[best];
  return res;
}

}  // namespace weakform

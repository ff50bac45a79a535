#include "weakform/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "weakform/errors.hpp"

namespace weakform {

namespace {

// Least squares restricted to the active columns. Throws NumericError when
// the submatrix is rank deficient.
Eigen::VectorXd restricted_ls(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                              const std::vector<int>& active) {
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd A(G.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i)
    A.col(i) = G.col(active[static_cast<std::size_t>(i)]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < k) {
    const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    const double cond = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
    throw NumericError("stls: rank-deficient least-squares subproblem (rank " +
                       std::to_string(qr.rank()) + " of " + std::to_string(k) +
                       " columns, condition estimate " + std::to_string(cond) + ")");
  }
  return qr.solve(b);
}

double relative_residual(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& w) {
  const double nb = b.norm();
  const double nr = (G * w - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

}  // namespace

SparseResult stls(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double lambda) {
  if (lambda < 0.0) throw ValueError("stls: threshold must be nonnegative");
  if (G.rows() != b.size()) throw ValueError("stls: row count of G must match b");
  const int J = static_cast<int>(G.cols());

  SparseResult r;
  r.lambda_star = lambda;
  r.w = Eigen::VectorXd::Zero(J);

  std::vector<int> active;
  for (int j = 0; j < J; ++j)
    if (G.col(j).cwiseAbs().maxCoeff() > 0.0) active.push_back(j);

  while (!active.empty()) {
    if (G.rows() < static_cast<Eigen::Index>(active.size()))
      throw ValueError("stls: fewer rows than active columns");
    const Eigen::VectorXd wa = restricted_ls(G, b, active);
    const double wmax = wa.cwiseAbs().maxCoeff();
    std::vector<int> kept;
    for (std::size_t i = 0; i < active.size(); ++i)
      if (!(std::abs(wa[static_cast<Eigen::Index>(i)]) < lambda * wmax))
        kept.push_back(active[i]);
    if (kept.size() == active.size()) {
      for (std::size_t i = 0; i < active.size(); ++i)
        r.w[active[i]] = wa[static_cast<Eigen::Index>(i)];
      r.support = active;
      r.residual = relative_residual(G, b, r.w);
      return r;
    }
    active = std::move(kept);
  }

  r.degenerate = true;
  r.residual = relative_residual(G, b, r.w);
  return r;
}

SparseResult select_lambda(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           std::span<const double> lambdas, double gamma) {
  if (lambdas.empty()) throw ValueError("select_lambda: empty threshold grid");
  if (!std::is_sorted(lambdas.begin(), lambdas.end()))
    throw ValueError("select_lambda: threshold grid must be sorted ascending");
  const double J = static_cast<double>(G.cols());

  SparseResult best;
  bool have_best = false;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> curve;
  curve.reserve(lambdas.size());

  for (double lam : lambdas) {
    SparseResult r = stls(G, b, lam);
    const double loss = r.residual + gamma * static_cast<double>(r.support.size()) / J;
    curve.emplace_back(lam, loss);
    if (!r.degenerate && loss <= best_loss) {
      best_loss = loss;
      best = std::move(r);
      have_best = true;
    }
  }
  if (!have_best)
    throw NumericError("select_lambda: every threshold removed all terms");
  best.loss_curve = std::move(curve);
  return best;
}

std::vector<double> default_lambda_grid() {
  constexpr int kCount = 40;
  constexpr double kLo = 1e-4;
  constexpr double kHi = 1.0;
  std::vector<double> grid(kCount);
  for (int i = 0; i < kCount; ++i)
    grid[static_cast<std::size_t>(i)] =
        kLo * std::pow(kHi / kLo, static_cast<double>(i) / (kCount - 1));
  return grid;
}

DiscoveryResult discover_equation(const WeakSystem& sys, int response,
                                  std::span<const double> lambdas, double gamma) {
  if (response < 0 || response >= sys.components)
    throw ValueError("discover_equation: response component out of range");
  DiscoveryResult out;
  out.sparse = select_lambda(sys.scaled_G(), sys.scaled_b(response), lambdas, gamma);
  out.coefficients = sys.unscale_coeffs(out.sparse.w, response);
  out.support = out.sparse.support;
  out.residual = out.sparse.residual;
  return out;
}

}  // namespace weakform

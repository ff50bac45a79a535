#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "weakform/weak_system.hpp"

namespace weakform {

struct SparseResult {
  Eigen::VectorXd w;           // length J, zeros off the support
  std::vector<int> support;    // sorted indices of nonzero coefficients
  double lambda_star = 0.0;    // threshold that produced this result
  std::vector<std::pair<double, double>> loss_curve;  // (lambda, loss) samples
  double residual = 0.0;       // ||G w - b|| / ||b||
  bool degenerate = false;     // every coefficient was thresholded away
};

// Sequential thresholding least squares with a threshold relative to the
// largest coefficient: repeat { solve LS on the active set; drop j with
// |w_j| < lambda * max |w| } until stable. Identically zero columns are
// excluded up front. Throws NumericError when a restricted subproblem is
// rank deficient.
SparseResult stls(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double lambda);

// Runs stls on each threshold of a sorted grid and keeps the minimizer of
//   loss(lambda) = ||G w - b|| / ||b|| + gamma * |support| / J,
// ties broken toward the larger (sparser) threshold. Degenerate fits are
// recorded in the loss curve but never selected.
SparseResult select_lambda(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           std::span<const double> lambdas, double gamma = 1.0);

// 40 log-spaced thresholds covering [1e-4, 1].
std::vector<double> default_lambda_grid();

// Model discovery for one response component of an assembled weak system:
// selects the threshold on the max-abs scaled system, then maps the solution
// back to physical coefficients.
struct DiscoveryResult {
  SparseResult sparse;             // in scaled coordinates
  Eigen::VectorXd coefficients;    // physical coefficients, zeros off support
  std::vector<int> support;
  double residual = 0.0;           // scaled relative residual
};

DiscoveryResult discover_equation(const WeakSystem& sys, int response,
                                  std::span<const double> lambdas, double gamma = 1.0);

}  // namespace weakform

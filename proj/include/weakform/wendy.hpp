#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "weakform/dataset.hpp"
#include "weakform/library.hpp"
#include "weakform/optimize.hpp"
#include "weakform/weak_system.hpp"

namespace weakform {

// A model with known structure: per response component, the library terms
// entering its right-hand side. Parameters are the concatenation of the
// per-equation coefficients in support order.
struct FixedModel {
  FeatureLibrary library;
  std::vector<std::vector<int>> supports;

  int parameter_count() const;
  // Index of equation c's i-th parameter in the stacked vector.
  int offset(int c) const;
};

// Shrinks the model's library to the union of its supports (indices
// remapped), so estimation never assembles unused columns.
FixedModel restrict_to_support(const FixedModel& model);

struct WendyOptions {
  std::optional<double> sigma;  // measurement-noise std; estimated when absent
  double tol = 1e-6;            // relative parameter-change stopping rule
  int max_iterations = 100;
  double regularization = 1e-10;  // scaled ridge on the residual covariance
};

struct GlsResult {
  Eigen::VectorXd w;                    // stacked parameters
  Eigen::MatrixXd covariance_estimate;  // parameter covariance (symmetric PSD)
  int iterations = 0;
  bool converged = false;
  std::vector<Eigen::VectorXd> history;      // w after every solve, w[0] = OLS
  std::vector<double> weighted_residuals;    // r' C^-1 r per reweighting step
  double sigma_hat = 0.0;                    // noise std actually used
};

// Iteratively reweighted generalized least squares on the weak system: the
// residual covariance is rebuilt each iteration by propagating i.i.d.
// measurement noise of std sigma through the linearized weak operators at
// the current parameters, and the weighted problem is re-solved until the
// parameters settle.
GlsResult wendy_estimate(const Dataset& d, const FixedModel& model,
                         const std::vector<Stencil>& stencils, const QueryPlan& plan,
                         const WendyOptions& opt = {});

// Strong-form equation-error baseline: central-difference time derivatives
// regressed on pointwise features by ordinary least squares. Time-series
// (single-axis) data only.
Eigen::VectorXd equation_error_ols(const Dataset& d, const FixedModel& model);

// White-noise std inferred from the median power in the top quarter of
// wavenumbers along the longest axis (median corrected for the chi-squared
// sampling distribution of averaged periodogram bins).
double estimate_noise_std(const Dataset& d);

struct OutputErrorResult {
  Eigen::VectorXd w;
  double objective = 0.0;  // sum of squared deviations from the data
  int evaluations = 0;
  bool converged = false;
  std::vector<double> objective_history;
};

// Output-error baseline: derivative-free minimization of || forward(w) - d ||^2
// where forward(w) re-solves the model; failed solves count as +infinity.
OutputErrorResult output_error_estimate(
    const Dataset& d, const std::function<Dataset(const Eigen::VectorXd&)>& forward,
    const Eigen::VectorXd& w0, const NelderMeadOptions& opt = {});

}  // namespace weakform

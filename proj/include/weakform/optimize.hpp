#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace weakform {

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double xtol = 1e-6;        // simplex diameter tolerance, relative to 1+|x|
  double ftol = 1e-10;       // vertex value spread tolerance
  double initial_step = 0.1; // relative perturbation building the first simplex
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> history;  // best value after each accepted step
};

// Derivative-free downhill-simplex minimization. The objective may return
// +infinity to reject a point (e.g. a diverged forward solve); throws
// NumericError if no evaluation ever produced a finite value.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opt = {});

}  // namespace weakform

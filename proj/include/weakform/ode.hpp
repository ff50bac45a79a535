#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "weakform/dataset.hpp"
#include "weakform/wendy.hpp"

namespace weakform {

// Vector field built from a library and per-equation coefficients, so any
// discovered or built-in model can be forward-solved with the same code.
struct OdeModel {
  FixedModel structure;
  Eigen::VectorXd params;  // stacked in support order

  int dim() const { return structure.library.components(); }
  void rhs(const std::vector<double>& u, std::vector<double>& dudt) const;
};

// Adaptive 4/5th-order Runge-Kutta (dense output) sampled on the uniform
// save grid; local error per step bounded by tol. Throws NumericError when
// the solution blows up or the step size underflows.
Dataset integrate_ode(const OdeModel& model, std::span<const double> u0,
                      const Axis& t_axis, double tol);

}  // namespace weakform

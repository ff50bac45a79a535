#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakform/dataset.hpp"
#include "weakform/ks.hpp"
#include "weakform/particles.hpp"
#include "weakform/wendy.hpp"

namespace weakform {

// A time-series benchmark model: the discovery library it lives in, its true
// supports and coefficients, and the default simulation window.
struct BuiltinOde {
  std::string name;
  FixedModel model;
  Eigen::VectorXd params;
  std::vector<double> u0;
  Axis t_axis;
  double tol = 1e-10;

  Dataset simulate() const;
  // Forward map over parameters on the same window, for output-error fits.
  std::function<Dataset(const Eigen::VectorXd&)> forward_map() const;
};

BuiltinOde builtin_logistic();
BuiltinOde builtin_lorenz();
BuiltinOde builtin_fhn();

// The Kuramoto-Sivashinsky benchmark: discovery library (derivative orders
// and state powers up to 6, 43 terms), true 3-term support, and solver
// configuration. `estimation` shrinks the window so output-error forward
// solves stay affordable.
struct BuiltinKs {
  std::string name;
  FixedModel model;
  Eigen::VectorXd params;  // (-0.5, -1, -1)
  KsConfig config;

  Dataset simulate(std::uint64_t seed) const;
  std::function<Dataset(const Eigen::VectorXd&)> forward_map(std::vector<double> u0) const;
};

BuiltinKs builtin_ks();             // 256 x 301 discovery default
BuiltinKs builtin_ks_estimation();  // 128 x 101 short-window variant

// Ornstein-Uhlenbeck coarse-graining benchmark: particle parameters, the
// histogram grids, and the density library whose terms d/dx(x p) and
// d^2/dx^2 p with coefficients (theta, D) form the mean-field equation.
struct BuiltinOu {
  std::string name;
  double theta = 1.0;
  double diffusion = 0.5;
  std::int64_t particles = 100000;
  double init_std = 1.5;
  double dt_internal = 0.01;
  Axis x_axis;
  Axis t_axis;
  FeatureLibrary library;
  std::vector<int> support;  // target support indices in `library`
  Eigen::VectorXd params;    // (theta, diffusion)

  ParticleEnsemble ensemble(std::uint64_t seed) const;
};

BuiltinOu builtin_ou();

}  // namespace weakform

#include "weakform/models.hpp"

#include <numbers>

#include "weakform/errors.hpp"
#include "weakform/ode.hpp"

namespace weakform {

Dataset BuiltinOde::simulate() const {
  return integrate_ode({model, params}, u0, t_axis, tol);
}

std::function<Dataset(const Eigen::VectorXd&)> BuiltinOde::forward_map() const {
  const FixedModel structure = model;
  const std::vector<double> init = u0;
  const Axis axis = t_axis;
  const double tolerance = tol;
  return [structure, init, axis, tolerance](const Eigen::VectorXd& w) {
    return integrate_ode({structure, w}, init, axis, tolerance);
  };
}

BuiltinOde builtin_logistic() {
  BuiltinOde m;
  m.name = "logistic";
  // Library 1, u, u^2, u^3; dynamics u' = u - u^2.
  m.model.library = ode_poly_trig_library(1, 3);
  m.model.supports = {{1, 2}};
  m.params = Eigen::Vector2d(1.0, -1.0);
  m.u0 = {0.1};
  m.t_axis = Axis{512, 0.0, 10.0};
  return m;
}

BuiltinOde builtin_lorenz() {
  BuiltinOde m;
  m.name = "lorenz";
  // Degree <= 2 monomials over (x, y, z): 1, x, y, z, x2, xy, xz, y2, yz, z2.
  m.model.library = ode_poly_trig_library(3, 2);
  const double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  m.model.supports = {{1, 2}, {1, 2, 6}, {3, 5}};
  m.params.resize(7);
  m.params << -sigma, sigma, rho, -1.0, -1.0, -beta, 1.0;
  m.u0 = {-8.0, 7.0, 27.0};
  m.t_axis = Axis{1024, 0.0, 10.0};
  return m;
}

BuiltinOde builtin_fhn() {
  BuiltinOde m;
  m.name = "fhn";
  // Degree <= 3 monomials over (v, w): 1, v, w, v2, vw, w2, v3, v2w, vw2, w3.
  m.model.library = ode_poly_trig_library(2, 3);
  const double a = 0.7, b = 0.8, tau = 12.5, current = 0.5;
  m.model.supports = {{0, 1, 2, 6}, {0, 1, 2}};
  m.params.resize(7);
  m.params << current, 1.0, -1.0, -1.0 / 3.0, a / tau, 1.0 / tau, -b / tau;
  m.u0 = {-1.0, 1.0};
  m.t_axis = Axis{1024, 0.0, 40.0};
  return m;
}

Dataset BuiltinKs::simulate(std::uint64_t seed) const {
  const std::vector<double> u0 = ks_random_initial(config.n, config.length, seed);
  return integrate_ks(u0, config);
}

std::function<Dataset(const Eigen::VectorXd&)> BuiltinKs::forward_map(
    std::vector<double> u0) const {
  const KsConfig base = config;
  return [base, u0 = std::move(u0)](const Eigen::VectorXd& w) {
    if (w.size() != 3)
      throw ValueError("ks forward map: expected 3 parameters");
    KsConfig cfg = base;
    cfg.coeffs[0] = w[0];
    cfg.coeffs[1] = w[1];
    cfg.coeffs[2] = w[2];
    return integrate_ks(u0, cfg);
  };
}

namespace {

BuiltinKs make_ks(KsConfig cfg) {
  BuiltinKs m;
  m.name = "ks";
  m.model.library = pde_poly_library(6, 6);
  // k-major, p-minor ordering: d/dx(u^2) = 8, d2/dx2(u) = 13, d4/dx4(u) = 25.
  m.model.supports = {{8, 13, 25}};
  m.params = Eigen::Vector3d(-0.5, -1.0, -1.0);
  m.config = cfg;
  return m;
}

}  // namespace

BuiltinKs builtin_ks() { return make_ks(KsConfig{}); }

BuiltinKs builtin_ks_estimation() {
  KsConfig cfg;
  cfg.n = 128;
  cfg.length = 32.0 * std::numbers::pi;
  cfg.t_end = 10.0;
  cfg.saves = 101;
  cfg.dt = 0.05;
  return make_ks(cfg);
}

ParticleEnsemble BuiltinOu::ensemble(std::uint64_t seed) const {
  return make_ou_ensemble(particles, theta, diffusion, init_std, seed);
}

BuiltinOu builtin_ou() {
  BuiltinOu m;
  m.name = "ou";
  m.x_axis = Axis{64, -4.0, 4.0};
  m.t_axis = Axis{51, 0.0, 5.0};
  // Constant, then x^a u^p factors under k derivatives (k, a, p nested):
  // d/dx(x u) = 7, d2/dx2(u) = 9.
  m.library = density_poly_library(2, 2, 1);
  m.support = {7, 9};
  m.params = Eigen::Vector2d(m.theta, m.diffusion);
  return m;
}

}  // namespace weakform

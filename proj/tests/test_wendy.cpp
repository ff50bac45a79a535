#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "weakform/dataset.hpp"
#include "weakform/errors.hpp"
#include "weakform/grid.hpp"
#include "weakform/library.hpp"
#include "weakform/models.hpp"
#include "weakform/noise.hpp"
#include "weakform/ode.hpp"
#include "weakform/optimize.hpp"
#include "weakform/rng.hpp"
#include "weakform/stencil.hpp"
#include "weakform/support_select.hpp"
#include "weakform/test_function.hpp"
#include "weakform/weak_system.hpp"
#include "weakform/wendy.hpp"

using namespace weakform;

namespace {

std::vector<Stencil> time_series_stencils(const Grid& g, int radius) {
  return {discretize(TestFunction::poly_bump(5), g.spacing(0), radius, 1)};
}

GlsResult fit_wendy(const Dataset& d, const FixedModel& model, int radius,
                    const WendyOptions& opt = {}, std::int64_t min_queries = 200) {
  std::vector<Stencil> st = time_series_stencils(d.grid(), radius);
  QueryPlan plan = query_plan_for_count(d.grid(), st, min_queries);
  return wendy_estimate(d, model, st, plan, opt);
}

double rel_l2_error(const Eigen::VectorXd& w, const Eigen::VectorXd& truth) {
  return (w - truth).norm() / truth.norm();
}

double geometric_mean(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += std::log(std::max(x, 1e-16));
  return std::exp(acc / static_cast<double>(xs.size()));
}

}  // namespace

TEST_CASE("zero sigma reduces the estimator to ordinary least squares") {
  Dataset d = builtin_logistic().simulate();
  FixedModel model = restrict_to_support(builtin_logistic().model);
  WendyOptions opt;
  opt.sigma = 0.0;
  GlsResult r = fit_wendy(d, model, 20, opt);
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  REQUIRE(!r.history.empty());
  CHECK((r.w - r.history.front()).norm() <= 1e-12 * r.w.norm());
  CHECK(r.sigma_hat == 0.0);
}

TEST_CASE("gls with identity covariance equals ols") {
  // With sigma = 0 the covariance collapses to the identity regularizer, so
  // the weighted solve must match the plain scaled least squares solution.
  Dataset d = builtin_logistic().simulate();
  FixedModel model = restrict_to_support(builtin_logistic().model);
  std::vector<Stencil> st = time_series_stencils(d.grid(), 20);
  QueryPlan plan = query_plan_for_count(d.grid(), st, 200);
  WendyOptions opt;
  opt.sigma = 0.0;
  GlsResult r = wendy_estimate(d, model, st, plan, opt);

  WeakSystem sys = assemble(d, model.library, st, plan);
  Eigen::VectorXd ols =
      sys.unscale_coeffs(sys.scaled_G().colPivHouseholderQr().solve(sys.scaled_b(0)), 0);
  CHECK((r.w - ols).norm() <= 1e-10 * ols.norm());
}

TEST_CASE("noiseless logistic parameters are recovered to a tenth percent") {
  Dataset d = builtin_logistic().simulate();
  FixedModel model = restrict_to_support(builtin_logistic().model);
  GlsResult r = fit_wendy(d, model, 20);
  REQUIRE(r.w.size() == 2);
  Eigen::VectorXd truth(2);
  truth << 1.0, -1.0;
  CHECK(rel_l2_error(r.w, truth) <= 1e-3);
}

TEST_CASE("reweighting beats the naive equation error baseline on lorenz") {
  // 20 seeded 10% noise trials; compare geometric-mean relative errors.
  BuiltinOde lz = builtin_lorenz();
  Dataset clean = lz.simulate();
  FixedModel model = restrict_to_support(lz.model);
  Eigen::VectorXd truth = lz.params;
  std::vector<double> wendy_err, ee_err;
  for (int trial = 0; trial < 20; ++trial) {
    Dataset noisy = add_noise(
        clean, NoiseSpec{NoiseKind::GaussianAdditive, 0.10, derive_seed(100, trial)});
    GlsResult w = fit_wendy(noisy, model, 15, {}, 400);
    wendy_err.push_back(rel_l2_error(w.w, truth));
    Eigen::VectorXd ee = equation_error_ols(noisy, model);
    ee_err.push_back(rel_l2_error(ee, truth));
  }
  double gw = geometric_mean(wendy_err);
  double ge = geometric_mean(ee_err);
  CHECK(gw < ge);
  CHECK(gw < 0.5);  // sanity: the estimate is meaningful at all
}

TEST_CASE("logistic estimation is equivariant under data scaling") {
  // u -> c u maps (w1, w2) to (w1, w2/c) for u' = w1 u + w2 u^2.
  Dataset d = builtin_logistic().simulate();
  const double c = 3.0;
  std::vector<double> scaled = d.values();
  for (double& v : scaled) v *= c;
  Dataset dc(d.grid(), d.components(), std::move(scaled));
  FixedModel model = restrict_to_support(builtin_logistic().model);
  GlsResult a = fit_wendy(d, model, 20);
  GlsResult b = fit_wendy(dc, model, 20);
  CHECK(b.w(0) == doctest::Approx(a.w(0)).epsilon(1e-6));
  CHECK(b.w(1) == doctest::Approx(a.w(1) / c).epsilon(1e-6));
}

TEST_CASE("parameter covariance is symmetric positive semidefinite") {
  BuiltinOde lz = builtin_lorenz();
  Dataset noisy = add_noise(lz.simulate(),
                            NoiseSpec{NoiseKind::GaussianAdditive, 0.1, 7});
  FixedModel model = restrict_to_support(lz.model);
  GlsResult r = fit_wendy(noisy, model, 15, {}, 400);
  const Eigen::MatrixXd& C = r.covariance_estimate;
  REQUIRE(C.rows() == r.w.size());
  CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * C.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * C.trace());
  // Iteration history starts at the OLS solution and the run reports
  // waypoints for every solve.
  CHECK(static_cast<int>(r.history.size()) >= r.iterations);
  CHECK(!r.weighted_residuals.empty());
}

TEST_CASE("noise standard deviation is estimated within ten percent") {
  Grid g = make_grid({Axis{256, 0.0, 1.0}, Axis{64, 0.0, 1.0}});
  Rng rng(3);
  for (double s : {0.05, 0.5, 2.0}) {
    std::vector<double> vals(256 * 64);
    for (double& v : vals) v = s * rng.normal();
    Dataset d(g, 1, std::move(vals));
    double est = estimate_noise_std(d);
    CHECK(est >= 0.9 * s);
    CHECK(est <= 1.1 * s);
  }
}

TEST_CASE("noiseless smooth fields report near zero noise") {
  Dataset clean = builtin_ks_estimation().simulate(5);
  double est = estimate_noise_std(clean);
  CHECK(est <= 0.05 * clean.rms());
  // Adding noise strictly increases the estimate.
  Dataset noisy = add_noise(clean, NoiseSpec{NoiseKind::GaussianAdditive, 0.2, 9});
  CHECK(estimate_noise_std(noisy) > est);
  // And the noisy estimate lands near the injected sigma.
  double sigma = 0.2 * clean.rms();
  CHECK(estimate_noise_std(noisy) >= 0.85 * sigma);
  CHECK(estimate_noise_std(noisy) <= 1.15 * sigma);
}

TEST_CASE("nelder mead minimizes the rosenbrock valley") {
  auto rosen = [](const Eigen::VectorXd& x) {
    double a = 1.0 - x(0);
    double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  NelderMeadOptions opt;
  opt.max_evaluations = 4000;
  opt.xtol = 1e-9;
  opt.ftol = 1e-14;
  NelderMeadResult r = nelder_mead(rosen, x0, opt);
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-3));
  // History of best values is non-increasing.
  for (std::size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i] <= r.history[i - 1] + 1e-15);
}

TEST_CASE("nelder mead tolerates infinite regions and reports failure cleanly") {
  auto half_plane = [](const Eigen::VectorXd& x) {
    if (x(0) < 0.0) return std::numeric_limits<double>::infinity();
    return (x(0) - 2.0) * (x(0) - 2.0);
  };
  Eigen::VectorXd x0(1);
  x0 << 0.5;
  NelderMeadResult r = nelder_mead(half_plane, x0, {});
  CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-4));

  auto always_bad = [](const Eigen::VectorXd&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(nelder_mead(always_bad, x0, {}), NumericError);
}

TEST_CASE("output error fixed point at the truth") {
  BuiltinOde lg = builtin_logistic();
  Dataset clean = lg.simulate();
  Eigen::VectorXd truth = lg.params;
  OutputErrorResult r = output_error_estimate(clean, lg.forward_map(), truth, {});
  CHECK(rel_l2_error(r.w, truth) <= 1e-6);
  CHECK(r.objective <= 1e-12);
}

TEST_CASE("output error recovers logistic parameters from a biased start") {
  BuiltinOde lg = builtin_logistic();
  Dataset clean = lg.simulate();
  Eigen::VectorXd w0 = lg.params * 1.2;  // 20% off
  NelderMeadOptions opt;
  opt.max_evaluations = 800;
  opt.xtol = 1e-8;
  opt.ftol = 1e-16;
  OutputErrorResult r = output_error_estimate(clean, lg.forward_map(), w0, opt);
  CHECK(rel_l2_error(r.w, lg.params) <= 0.01);
  CHECK(r.evaluations > 0);
  REQUIRE(!r.objective_history.empty());
  CHECK(r.objective_history.back() <= r.objective_history.front());
}

TEST_CASE("output error surfaces total forward failure as a numeric error") {
  BuiltinOde lg = builtin_logistic();
  Dataset clean = lg.simulate();
  auto broken = [](const Eigen::VectorXd&) -> Dataset {
    throw NumericError("forward solve diverged");
  };
  Eigen::VectorXd w0 = lg.params;
  CHECK_THROWS_AS(output_error_estimate(clean, broken, w0, {}), NumericError);
}

TEST_CASE("restrict_to_support remaps stacked supports") {
  FixedModel model;
  model.library = ode_poly_trig_library(2, 2);
  model.supports = {{1, 5}, {2, 5}};
  FixedModel sub = restrict_to_support(model);
  CHECK(sub.library.size() == 3);
  CHECK(sub.library.term_name(0) == model.library.term_name(1));
  CHECK(sub.library.term_name(1) == model.library.term_name(2));
  CHECK(sub.library.term_name(2) == model.library.term_name(5));
  CHECK(sub.supports == std::vector<std::vector<int>>{{0, 2}, {1, 2}});
  CHECK(sub.parameter_count() == model.parameter_count());

  FixedModel bad;
  bad.library = ode_poly_trig_library(1, 1);
  bad.supports = {{7}};
  CHECK_THROWS_AS(restrict_to_support(bad), ValueError);
}

TEST_CASE("multi equation estimation stacks parameters in support order") {
  BuiltinOde lz = builtin_lorenz();
  Dataset clean = lz.simulate();
  FixedModel model = restrict_to_support(lz.model);
  GlsResult r = fit_wendy(clean, model, 15, {}, 400);
  REQUIRE(r.w.size() == lz.params.size());
  CHECK(rel_l2_error(r.w, lz.params) <= 1e-3);
  // offset(c) walks the stacked layout.
  CHECK(model.offset(0) == 0);
  CHECK(model.offset(1) == 2);
  CHECK(model.offset(2) == 5);
}

TEST_CASE("equation error baseline works only on time series data") {
  Dataset ks = builtin_ks_estimation().simulate(1);
  FixedModel model = restrict_to_support(builtin_ks().model);
  CHECK_THROWS_AS(equation_error_ols(ks, model), ValueError);
}

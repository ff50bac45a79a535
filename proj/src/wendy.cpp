#include "weakform/wendy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include <Eigen/Sparse>

#include "weakform/errors.hpp"
#include "weakform/ndarray.hpp"
#include "weakform/support_select.hpp"

namespace weakform {

int FixedModel::parameter_count() const {
  int p = 0;
  for (const std::vector<int>& s : supports) p += static_cast<int>(s.size());
  return p;
}

int FixedModel::offset(int c) const {
  int p = 0;
  for (int i = 0; i < c; ++i)
    p += static_cast<int>(supports[static_cast<std::size_t>(i)].size());
  return p;
}

FixedModel restrict_to_support(const FixedModel& model) {
  std::vector<int> keep;
  for (const std::vector<int>& s : model.supports) keep.insert(keep.end(), s.begin(), s.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

  std::map<int, int> remap;
  for (std::size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<int>(i);

  FixedModel out;
  out.library = model.library.restricted(keep);
  out.supports.reserve(model.supports.size());
  for (const std::vector<int>& s : model.supports) {
    std::vector<int> ns;
    ns.reserve(s.size());
    for (int j : s) {
      auto it = remap.find(j);
      if (it == remap.end()) throw ValueError("restrict_to_support: support index out of range");
      ns.push_back(it->second);
    }
    out.supports.push_back(std::move(ns));
  }
  return out;
}

namespace {

void validate_model(const FixedModel& model, int components) {
  if (static_cast<int>(model.supports.size()) != components)
    throw ValueError("wendy: need one support per response component");
  for (const std::vector<int>& s : model.supports) {
    if (s.empty()) throw ValueError("wendy: empty equation support");
    for (int j : s)
      if (j < 0 || j >= model.library.size())
        throw ValueError("wendy: support index out of library range");
  }
}

// Tensor-product footprint weights for one derivative multi-index: entry
// `off` (row-major over the footprint box) multiplies the sample at that
// offset, with the evolution axis at the given order.
std::vector<double> footprint_tensor(const std::vector<Stencil>& stencils,
                                     std::span<const int> spatial_orders,
                                     int time_order) {
  const std::size_t ndim = stencils.size();
  std::vector<std::int64_t> fdims(ndim);
  for (std::size_t a = 0; a < ndim; ++a) fdims[a] = 2 * stencils[a].radius + 1;
  std::int64_t total = 1;
  for (std::int64_t n : fdims) total *= n;

  std::vector<double> tensor(static_cast<std::size_t>(total));
  std::vector<std::int64_t> idx(ndim, 0);
  for (std::int64_t i = 0; i < total; ++i) {
    double v = 1.0;
    for (std::size_t a = 0; a + 1 < ndim; ++a) {
      const int ord = a < spatial_orders.size() ? spatial_orders[a] : 0;
      v *= stencils[a].weights[static_cast<std::size_t>(ord)]
                              [static_cast<std::size_t>(idx[a])];
    }
    v *= stencils[ndim - 1].weights[static_cast<std::size_t>(time_order)]
                                   [static_cast<std::size_t>(idx[ndim - 1])];
    tensor[static_cast<std::size_t>(i)] = v;
    for (std::size_t a = ndim; a-- > 0;) {
      if (++idx[a] < fdims[a]) break;
      idx[a] = 0;
    }
  }
  return tensor;
}

std::vector<int> padded_orders(const Term& t, int spatial_dims) {
  std::vector<int> k(static_cast<std::size_t>(spatial_dims), 0);
  for (std::size_t a = 0; a < t.derivative.size() && a < k.size(); ++a)
    k[a] = t.derivative[a];
  return k;
}

}  // namespace

GlsResult wendy_estimate(const Dataset& d, const FixedModel& model,
                         const std::vector<Stencil>& stencils, const QueryPlan& plan,
                         const WendyOptions& opt) {
  validate_model(model, d.components());
  if (opt.tol <= 0.0) throw ValueError("wendy: tolerance must be positive");
  if (opt.max_iterations < 1) throw ValueError("wendy: need at least one iteration");

  const WeakSystem sys = assemble(d, model.library, stencils, plan);
  const int C = d.components();
  const std::int64_t Q = sys.G.rows();
  const int P = model.parameter_count();
  const std::int64_t rows = Q * C;
  if (rows < P) throw ValueError("wendy: weak system is underdetermined");

  // Stacked block-diagonal design with max-abs column scaling; the raw
  // right-hand side keeps the residual in physical units so the noise
  // covariance applies to it directly.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, P);
  Eigen::VectorXd rhs(rows);
  Eigen::VectorXd col_scale(P);
  for (int c = 0; c < C; ++c) {
    const std::vector<int>& sup = model.supports[static_cast<std::size_t>(c)];
    const int ofs = model.offset(c);
    for (std::size_t i = 0; i < sup.size(); ++i) {
      const int j = sup[i];
      double s = sys.G.col(j).cwiseAbs().maxCoeff();
      if (s <= 0.0) s = 1.0;
      col_scale[ofs + static_cast<int>(i)] = s;
      A.block(c * Q, ofs + static_cast<int>(i), Q, 1) = sys.G.col(j) / s;
    }
    rhs.segment(c * Q, Q) = sys.b.col(c);
  }
  auto unscale = [&](const Eigen::VectorXd& ws) -> Eigen::VectorXd {
    return ws.cwiseQuotient(col_scale);
  };
  auto param_cov = [&](const Eigen::MatrixXd& normal) -> Eigen::MatrixXd {
    Eigen::MatrixXd cov = normal.ldlt().solve(Eigen::MatrixXd::Identity(P, P));
    cov = cov.cwiseQuotient((col_scale * col_scale.transpose()).eval()).eval();
    return 0.5 * (cov + cov.transpose());
  };

  GlsResult res;
  res.sigma_hat = opt.sigma ? *opt.sigma : estimate_noise_std(d);
  if (res.sigma_hat < 0.0) throw ValueError("wendy: noise std must be nonnegative");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < P)
    throw NumericError("wendy: rank-deficient design matrix for the fixed support");
  Eigen::VectorXd ws = qr.solve(rhs);  // scaled OLS start
  res.history.push_back(unscale(ws));

  if (res.sigma_hat == 0.0) {
    res.w = res.history.front();
    res.iterations = 0;
    res.converged = true;
    res.covariance_estimate = param_cov(A.transpose() * A);
    return res;
  }

  // Geometry shared by every covariance rebuild.
  const Grid& grid = d.grid();
  const int ndim = grid.ndim();
  const int spatial = ndim - 1;
  std::vector<std::int64_t> dims(static_cast<std::size_t>(ndim));
  std::vector<std::int64_t> fdims(static_cast<std::size_t>(ndim));
  for (int a = 0; a < ndim; ++a) {
    dims[static_cast<std::size_t>(a)] = grid.axis_size(a);
    fdims[static_cast<std::size_t>(a)] =
        2 * stencils[static_cast<std::size_t>(a)].radius + 1;
  }
  const std::vector<std::int64_t> gstr = row_major_strides(dims);
  std::int64_t F = 1;
  for (std::int64_t n : fdims) F *= n;

  // delta[off] = flat grid offset of footprint cell `off` from the corner.
  std::vector<std::int64_t> delta(static_cast<std::size_t>(F));
  {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(ndim), 0);
    for (std::int64_t i = 0; i < F; ++i) {
      std::int64_t o = 0;
      for (int a = 0; a < ndim; ++a)
        o += idx[static_cast<std::size_t>(a)] * gstr[static_cast<std::size_t>(a)];
      delta[static_cast<std::size_t>(i)] = o;
      for (int a = ndim - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < fdims[static_cast<std::size_t>(a)]) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
  }
  std::vector<std::int64_t> corner(static_cast<std::size_t>(Q));
  for (std::int64_t q = 0; q < Q; ++q) {
    const std::vector<std::int64_t> p = plan.point(q);
    std::int64_t o = 0;
    for (int a = 0; a < ndim; ++a)
      o += (p[static_cast<std::size_t>(a)] -
            stencils[static_cast<std::size_t>(a)].radius) *
           gstr[static_cast<std::size_t>(a)];
    corner[static_cast<std::size_t>(q)] = o;
  }

  // Parameter-independent pieces: footprint tensors per distinct derivative
  // multi-index and the state Jacobian field of every support term.
  const std::vector<double> b_tensor = footprint_tensor(stencils, {}, 1);
  std::map<std::vector<int>, std::vector<double>> tensors;
  std::vector<std::vector<std::vector<int>>> eq_orders(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c)
    for (int j : model.supports[static_cast<std::size_t>(c)]) {
      std::vector<int> k = padded_orders(model.library.term(j), spatial);
      if (!tensors.count(k)) tensors.emplace(k, footprint_tensor(stencils, k, 0));
      auto& lst = eq_orders[static_cast<std::size_t>(c)];
      if (std::find(lst.begin(), lst.end(), k) == lst.end()) lst.push_back(k);
    }
  const std::int64_t npts = grid.num_points();
  std::map<std::pair<int, int>, std::vector<double>> jac;  // (term, comp) -> field
  for (int c = 0; c < C; ++c)
    for (int j : model.supports[static_cast<std::size_t>(c)])
      for (int cn = 0; cn < C; ++cn)
        if (!jac.count({j, cn}))
          jac.emplace(std::make_pair(j, cn),
                      evaluate_pointwise_deriv(model.library.term(j), d, cn));

  const double sig2 = res.sigma_hat * res.sigma_hat;
  Eigen::VectorXd w_prev = res.history.front();
  Eigen::MatrixXd normal;  // A' C^-1 A of the last solve, for the covariance
  for (int it = 1; it <= opt.max_iterations; ++it) {
    // For each equation and derivative multi-index, the grid field
    //   sum_{j in support, orders(j)=k} w_j * d f_j / d u_cn
    // per noise component cn; the footprint tensor factors out of the sum.
    struct Part {
      const std::vector<double>* tensor;
      std::vector<std::vector<double>> field;  // per noise component
    };
    std::vector<std::vector<Part>> parts(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      const std::vector<int>& sup = model.supports[static_cast<std::size_t>(c)];
      const int ofs = model.offset(c);
      for (const std::vector<int>& k : eq_orders[static_cast<std::size_t>(c)]) {
        Part part;
        part.tensor = &tensors.at(k);
        part.field.assign(static_cast<std::size_t>(C),
                          std::vector<double>(static_cast<std::size_t>(npts), 0.0));
        for (std::size_t i = 0; i < sup.size(); ++i) {
          const int j = sup[i];
          if (padded_orders(model.library.term(j), spatial) != k) continue;
          const double wj = w_prev[ofs + static_cast<int>(i)];
          for (int cn = 0; cn < C; ++cn) {
            const std::vector<double>& fj = jac.at({j, cn});
            std::vector<double>& acc = part.field[static_cast<std::size_t>(cn)];
            for (std::int64_t g = 0; g < npts; ++g)
              acc[static_cast<std::size_t>(g)] += wj * fj[static_cast<std::size_t>(g)];
          }
        }
        parts[static_cast<std::size_t>(c)].push_back(std::move(part));
      }
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(rows * F * C));
    for (int c = 0; c < C; ++c) {
      const std::vector<Part>& eq_parts = parts[static_cast<std::size_t>(c)];
      for (std::int64_t q = 0; q < Q; ++q) {
        const std::int64_t row = c * Q + q;
        const std::int64_t base = corner[static_cast<std::size_t>(q)];
        for (std::int64_t off = 0; off < F; ++off) {
          const std::size_t g =
              static_cast<std::size_t>(base + delta[static_cast<std::size_t>(off)]);
          for (int cn = 0; cn < C; ++cn) {
            double v = 0.0;
            for (const Part& part : eq_parts)
              v += (*part.tensor)[static_cast<std::size_t>(off)] *
                   part.field[static_cast<std::size_t>(cn)][g];
            if (cn == c) v -= b_tensor[static_cast<std::size_t>(off)];
            if (v != 0.0)
              trips.emplace_back(static_cast<int>(row),
                                 static_cast<int>(g * static_cast<std::size_t>(C) +
                                                  static_cast<std::size_t>(cn)),
                                 v);
          }
        }
      }
    }
    Eigen::SparseMatrix<double> L(static_cast<int>(rows), static_cast<int>(npts * C));
    L.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseMatrix<double> Lt = L.transpose();
    Eigen::SparseMatrix<double> LLt = L * Lt;
    Eigen::MatrixXd Cov = sig2 * Eigen::MatrixXd(LLt);
    const double tr = Cov.trace();
    const double ridge =
        tr > 0.0 ? opt.regularization * tr / static_cast<double>(rows) : 1.0;
    Cov.diagonal().array() += ridge;

    Eigen::LLT<Eigen::MatrixXd> llt(Cov);
    if (llt.info() != Eigen::Success)
      throw NumericError("wendy: residual covariance is singular after regularization");

    const Eigen::MatrixXd Ai = llt.solve(A);
    normal = A.transpose() * Ai;
    ws = normal.ldlt().solve(Ai.transpose() * rhs);
    const Eigen::VectorXd w_new = unscale(ws);
    res.history.push_back(w_new);
    const Eigen::VectorXd r = A * ws - rhs;
    res.weighted_residuals.push_back(r.dot(llt.solve(r)));
    res.iterations = it;

    const double denom = w_prev.norm();
    const double change = (w_new - w_prev).norm() / (denom > 0.0 ? denom : 1.0);
    w_prev = w_new;
    if (change <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.w = w_prev;
  res.covariance_estimate = param_cov(normal);
  return res;
}

Eigen::VectorXd equation_error_ols(const Dataset& d, const FixedModel& model) {
  validate_model(model, d.components());
  if (d.grid().ndim() != 1)
    throw ValueError("equation_error_ols: time-series (single-axis) data only");
  const std::int64_t n = d.grid().axis_size(0);
  if (n < 3) throw ValueError("equation_error_ols: need at least three samples");
  const int C = d.components();
  const double dt = d.grid().spacing(0);

  Eigen::VectorXd w(model.parameter_count());
  for (int c = 0; c < C; ++c) {
    const std::vector<int>& sup = model.supports[static_cast<std::size_t>(c)];
    const Eigen::Index k = static_cast<Eigen::Index>(sup.size());
    Eigen::MatrixXd A(n - 2, k);
    Eigen::VectorXd rhs(n - 2);
    for (Eigen::Index i = 0; i < k; ++i) {
      const std::vector<double> f =
          evaluate_pointwise(model.library.term(sup[static_cast<std::size_t>(i)]), d);
      for (std::int64_t t = 1; t + 1 < n; ++t)
        A(t - 1, i) = f[static_cast<std::size_t>(t)];
    }
    const std::vector<double>& v = d.values();
    for (std::int64_t t = 1; t + 1 < n; ++t)
      rhs[t - 1] = (v[static_cast<std::size_t>((t + 1) * C + c)] -
                    v[static_cast<std::size_t>((t - 1) * C + c)]) /
                   (2.0 * dt);
    Eigen::VectorXd scale(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      double s = A.col(i).cwiseAbs().maxCoeff();
      scale[i] = s > 0.0 ? s : 1.0;
      A.col(i) /= scale[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < k)
      throw NumericError("equation_error_ols: rank-deficient design matrix");
    w.segment(model.offset(c), k) = qr.solve(rhs).cwiseQuotient(scale);
  }
  return w;
}

double estimate_noise_std(const Dataset& d) {
  const Grid& g = d.grid();
  for (int a = 0; a < g.ndim(); ++a)
    if (g.axis_size(a) < 16)
      throw ValueError("estimate_noise_std: every axis needs at least 16 points");
  int axis = 0;
  for (int a = 1; a < g.ndim(); ++a)
    if (g.axis_size(a) > g.axis_size(axis)) axis = a;

  const std::vector<double> P = averaged_power_spectrum(d, axis);
  const std::size_t n2 = P.size() - 1;
  std::size_t lo = (3 * n2) / 4;
  if (lo < 1) lo = 1;
  std::vector<double> top(P.begin() + static_cast<std::ptrdiff_t>(lo), P.end());
  std::sort(top.begin(), top.end());
  const double median = top.size() % 2 == 1
                            ? top[top.size() / 2]
                            : 0.5 * (top[top.size() / 2 - 1] + top[top.size() / 2]);

  // Each averaged periodogram bin is chi-squared; the median understates the
  // mean by (1 - 1/(9L))^3 with L the number of averaged lines.
  const double lines = static_cast<double>(g.num_points() / g.axis_size(axis)) *
                       static_cast<double>(d.components());
  const double wh = 1.0 - 1.0 / (9.0 * lines);
  return std::sqrt(std::max(median, 0.0) / (wh * wh * wh));
}

namespace {

// Tolerant grid comparison: forward solvers rebuilt from stored axis bounds
// can differ from the data grid in the last few ulps.
bool grids_compatible(const Grid& a, const Grid& b) {
  if (a.ndim() != b.ndim()) return false;
  for (int i = 0; i < a.ndim(); ++i) {
    const Axis& ax = a.axis(i);
    const Axis& bx = b.axis(i);
    if (ax.n != bx.n) return false;
    const double scale = std::max({std::abs(ax.lo), std::abs(ax.hi), 1.0});
    if (std::abs(ax.lo - bx.lo) > 1e-9 * scale) return false;
    if (std::abs(ax.hi - bx.hi) > 1e-9 * scale) return false;
  }
  return true;
}

}  // namespace

OutputErrorResult output_error_estimate(
    const Dataset& d, const std::function<Dataset(const Eigen::VectorXd&)>& forward,
    const Eigen::VectorXd& w0, const NelderMeadOptions& opt) {
  const std::size_t nv = d.values().size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto objective = [&](const Eigen::VectorXd& w) -> double {
    try {
      const Dataset sim = forward(w);
      if (!grids_compatible(sim.grid(), d.grid()) || sim.components() != d.components())
        throw ValueError("output_error_estimate: forward solve returned a mismatched grid");
      double acc = 0.0;
      for (std::size_t i = 0; i < nv; ++i) {
        const double r = sim.values()[i] - d.values()[i];
        acc += r * r;
      }
      return std::isfinite(acc) ? acc : kInf;
    } catch (const ValueError&) {
      throw;  // misconfiguration, not a solver failure
    } catch (const std::runtime_error&) {
      return kInf;  // diverged / failed forward solve
    }
  };

  NelderMeadResult nm = [&] {
    try {
      return nelder_mead(objective, w0, opt);
    } catch (const NumericError&) {
      throw NumericError("output_error_estimate: every forward solve failed");
    }
  }();
  OutputErrorResult res;
  res.w = nm.x;
  res.objective = nm.value;
  res.evaluations = nm.evaluations;
  res.converged = nm.converged;
  res.objective_history = std::move(nm.history);
  return res;
}

}  // namespace weakform

#include "weakform/weak_system.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>

#include "weakform/dataset_io.hpp"
#include "weakform/errors.hpp"
#include "weakform/fft.hpp"
#include "weakform/ndarray.hpp"

namespace weakform {

namespace {

std::vector<std::int64_t> plan_margins(const Grid& grid,
                                       const std::vector<Stencil>& stencils) {
  if (static_cast<int>(stencils.size()) != grid.ndim())
    throw ValueError("query_plan: need one stencil per grid axis");
  std::vector<std::int64_t> m(stencils.size());
  for (std::size_t a = 0; a < stencils.size(); ++a) {
    m[a] = stencils[a].radius;
    if (grid.axis_size(static_cast<int>(a)) - 2 * m[a] < 1)
      throw ValueError("query_plan: grid axis " + std::to_string(a) +
                       " is too small to place any interior query");
  }
  return m;
}

QueryPlan plan_with_stride(const Grid& grid, const std::vector<std::int64_t>& margins,
                           std::int64_t stride) {
  QueryPlan p;
  p.start = margins;
  p.stride.assign(margins.size(), stride);
  p.count.resize(margins.size());
  for (std::size_t a = 0; a < margins.size(); ++a) {
    const std::int64_t avail = grid.axis_size(static_cast<int>(a)) - 2 * margins[a];
    p.count[a] = (avail + stride - 1) / stride;
  }
  return p;
}

}  // namespace

std::int64_t QueryPlan::total() const {
  std::int64_t t = 1;
  for (std::int64_t c : count) t *= c;
  return t;
}

std::vector<std::int64_t> QueryPlan::point(std::int64_t flat) const {
  std::vector<std::int64_t> idx(count.size());
  for (std::size_t a = count.size(); a-- > 0;) {
    idx[a] = start[a] + (flat % count[a]) * stride[a];
    flat /= count[a];
  }
  return idx;
}

QueryPlan query_plan(const Grid& grid, const std::vector<Stencil>& stencils,
                     std::int64_t stride) {
  if (stride < 1) throw ValueError("query_plan: stride must be >= 1");
  return plan_with_stride(grid, plan_margins(grid, stencils), stride);
}

QueryPlan query_plan_for_count(const Grid& grid, const std::vector<Stencil>& stencils,
                               std::int64_t min_count) {
  if (min_count < 1) throw ValueError("query_plan: requested count must be >= 1");
  const std::vector<std::int64_t> margins = plan_margins(grid, stencils);
  std::int64_t max_avail = 1;
  for (std::size_t a = 0; a < margins.size(); ++a)
    max_avail = std::max<std::int64_t>(
        max_avail, grid.axis_size(static_cast<int>(a)) - 2 * margins[a]);
  QueryPlan best = plan_with_stride(grid, margins, 1);
  if (best.total() < min_count)
    throw ValueError("query_plan: requested count exceeds the available interior points");
  for (std::int64_t s = 2; s <= max_avail; ++s) {
    QueryPlan p = plan_with_stride(grid, margins, s);
    if (p.total() < min_count) break;
    best = std::move(p);
  }
  return best;
}

namespace {

void check_kernels(std::span<const std::int64_t> dims,
                   const std::vector<std::vector<double>>& kernels) {
  if (kernels.size() != dims.size())
    throw ValueError("convolve: need one kernel per array axis");
  for (std::size_t a = 0; a < kernels.size(); ++a) {
    const std::int64_t w = static_cast<std::int64_t>(kernels[a].size());
    if (w < 1 || w % 2 == 0)
      throw ValueError("convolve: kernels must have odd positive length");
    if (w > dims[a]) throw ValueError("convolve: stencil footprint exceeds the grid");
  }
}

// Applies one axis of the separable correlation. line_op(in_line, out_line)
// receives pointers plus strides and lengths resolved by the caller.
template <class LineOp>
std::vector<double> contract_axis(const std::vector<double>& in,
                                  std::vector<std::int64_t>& dims, std::size_t axis,
                                  std::int64_t m, LineOp&& line_op) {
  std::vector<std::int64_t> odims(dims.begin(), dims.end());
  odims[axis] -= 2 * m;
  const std::vector<std::int64_t> istr = row_major_strides(dims);
  const std::vector<std::int64_t> ostr = row_major_strides(odims);
  std::int64_t out_total = 1;
  for (std::int64_t d : odims) out_total *= d;
  std::vector<double> out(static_cast<std::size_t>(out_total));

  std::vector<std::int64_t> idx(dims.size(), 0);
  while (true) {
    std::int64_t ibase = 0, obase = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      ibase += idx[a] * istr[a];
      obase += idx[a] * ostr[a];
    }
    line_op(in.data() + ibase, istr[axis], dims[axis], out.data() + obase, ostr[axis]);
    int a = static_cast<int>(dims.size()) - 1;
    for (; a >= 0; --a) {
      if (a == static_cast<int>(axis)) continue;
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  dims = std::move(odims);
  return out;
}

}  // namespace

std::vector<double> fft_convolve(const std::vector<double>& values,
                                 std::span<const std::int64_t> dims,
                                 const std::vector<std::vector<double>>& kernels) {
  check_kernels(dims, kernels);
  std::vector<double> cur = values;
  std::vector<std::int64_t> cdims(dims.begin(), dims.end());
  for (std::size_t axis = 0; axis < kernels.size(); ++axis) {
    const std::vector<double>& k = kernels[axis];
    const std::int64_t m = (static_cast<std::int64_t>(k.size()) - 1) / 2;
    if (m == 0) {
      for (double& v : cur) v *= k[0];
      continue;
    }
    const std::int64_t n = cdims[axis];
    const std::int64_t pad = n + 2 * m;  // linear convolution length, no wraparound
    RealFft fft(static_cast<int>(pad));
    const int nbins = fft.spectrum_size();

    // Spectrum of the reversed, zero-padded kernel: correlation with k equals
    // convolution with its reverse, and corr[q] = linconv[q + 2m].
    std::vector<double> krev(static_cast<std::size_t>(pad), 0.0);
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(k.size()); ++t)
      krev[static_cast<std::size_t>(t)] = k[static_cast<std::size_t>(2 * m - t)];
    std::vector<std::complex<double>> khat(static_cast<std::size_t>(nbins));
    fft.forward(krev.data(), khat.data());

    std::vector<double> line(static_cast<std::size_t>(pad));
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nbins));
    cur = contract_axis(cur, cdims, axis, m,
                        [&](const double* in, std::int64_t istride, std::int64_t len,
                            double* out, std::int64_t ostride) {
                          for (std::int64_t i = 0; i < len; ++i)
                            line[static_cast<std::size_t>(i)] = in[i * istride];
                          std::fill(line.begin() + len, line.end(), 0.0);
                          fft.forward(line.data(), spec.data());
                          for (int i = 0; i < nbins; ++i)
                            spec[static_cast<std::size_t>(i)] *= khat[static_cast<std::size_t>(i)];
                          fft.inverse(spec.data(), line.data());
                          const std::int64_t olen = len - 2 * m;
                          for (std::int64_t q = 0; q < olen; ++q)
                            out[q * ostride] = line[static_cast<std::size_t>(q + 2 * m)];
                        });
  }
  return cur;
}

std::vector<double> direct_convolve(const std::vector<double>& values,
                                    std::span<const std::int64_t> dims,
                                    const std::vector<std::vector<double>>& kernels) {
  check_kernels(dims, kernels);
  std::vector<double> cur = values;
  std::vector<std::int64_t> cdims(dims.begin(), dims.end());
  for (std::size_t axis = 0; axis < kernels.size(); ++axis) {
    const std::vector<double>& k = kernels[axis];
    const std::int64_t w = static_cast<std::int64_t>(k.size());
    const std::int64_t m = (w - 1) / 2;
    if (m == 0) {
      for (double& v : cur) v *= k[0];
      continue;
    }
    cur = contract_axis(cur, cdims, axis, m,
                        [&](const double* in, std::int64_t istride, std::int64_t len,
                            double* out, std::int64_t ostride) {
                          const std::int64_t olen = len - 2 * m;
                          for (std::int64_t q = 0; q < olen; ++q) {
                            double acc = 0.0;
                            for (std::int64_t t = 0; t < w; ++t)
                              acc += k[static_cast<std::size_t>(t)] * in[(q + t) * istride];
                            out[q * ostride] = acc;
                          }
                        });
  }
  return cur;
}

Eigen::MatrixXd WeakSystem::scaled_G() const {
  Eigen::MatrixXd S = G;
  for (Eigen::Index j = 0; j < S.cols(); ++j)
    S.col(j) /= scale_factors[static_cast<std::size_t>(j)];
  return S;
}

Eigen::VectorXd WeakSystem::scaled_b(int response) const {
  return b.col(response) / rhs_scale[static_cast<std::size_t>(response)];
}

Eigen::VectorXd WeakSystem::unscale_coeffs(const Eigen::VectorXd& w_scaled,
                                           int response) const {
  Eigen::VectorXd w = w_scaled;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    w[j] *= rhs_scale[static_cast<std::size_t>(response)] /
            scale_factors[static_cast<std::size_t>(j)];
  return w;
}

namespace {

std::vector<std::vector<double>> term_kernels(const Term& term,
                                              const std::vector<Stencil>& stencils,
                                              int spatial_dims) {
  std::vector<std::vector<double>> k(stencils.size());
  for (int a = 0; a < spatial_dims; ++a) {
    const int order =
        a < static_cast<int>(term.derivative.size()) ? term.derivative[a] : 0;
    if (order > stencils[static_cast<std::size_t>(a)].max_order())
      throw ValueError("assemble: stencil on axis " + std::to_string(a) +
                       " lacks derivative order " + std::to_string(order));
    k[static_cast<std::size_t>(a)] =
        stencils[static_cast<std::size_t>(a)].weights[static_cast<std::size_t>(order)];
  }
  k.back() = stencils.back().weights[0];  // plain phi on the evolution axis
  return k;
}

std::int64_t valid_offset(const QueryPlan& plan, std::int64_t flat,
                          const std::vector<std::int64_t>& margins,
                          const std::vector<std::int64_t>& valid_strides) {
  std::int64_t off = 0;
  std::vector<std::int64_t> p = plan.point(flat);
  for (std::size_t a = 0; a < p.size(); ++a)
    off += (p[a] - margins[a]) * valid_strides[a];
  return off;
}

}  // namespace

WeakSystem assemble(const Dataset& d, const FeatureLibrary& lib,
                    const std::vector<Stencil>& stencils, const QueryPlan& plan,
                    AssemblyMode mode) {
  const Grid& grid = d.grid();
  const int ndim = grid.ndim();
  if (static_cast<int>(stencils.size()) != ndim)
    throw ValueError("assemble: need one stencil per grid axis");
  if (lib.spatial_dims() != ndim - 1)
    throw ValueError("assemble: library spatial dimension does not match the grid");
  if (lib.components() != d.components())
    throw ValueError("assemble: library component count does not match the data");
  if (lib.size() == 0) throw ValueError("assemble: empty feature library");
  if (stencils.back().max_order() < 1)
    throw ValueError("assemble: evolution-axis stencil needs derivative order 1");
  const std::vector<int> need = lib.max_derivative_per_axis();
  for (int a = 0; a < ndim - 1; ++a)
    if (stencils[static_cast<std::size_t>(a)].max_order() < need[static_cast<std::size_t>(a)])
      throw ValueError("assemble: stencil on axis " + std::to_string(a) +
                       " lacks the library's highest derivative order");

  std::vector<std::int64_t> dims(static_cast<std::size_t>(ndim));
  std::vector<std::int64_t> margins(static_cast<std::size_t>(ndim));
  std::vector<std::int64_t> valid_dims(static_cast<std::size_t>(ndim));
  for (int a = 0; a < ndim; ++a) {
    dims[static_cast<std::size_t>(a)] = grid.axis_size(a);
    margins[static_cast<std::size_t>(a)] = stencils[static_cast<std::size_t>(a)].radius;
    valid_dims[static_cast<std::size_t>(a)] =
        dims[static_cast<std::size_t>(a)] - 2 * margins[static_cast<std::size_t>(a)];
    if (valid_dims[static_cast<std::size_t>(a)] < 1)
      throw ValueError("assemble: stencil footprint exceeds the grid");
  }

  if (static_cast<int>(plan.start.size()) != ndim)
    throw ValueError("assemble: query plan dimension does not match the grid");
  const std::int64_t Q = plan.total();
  if (Q < 1) throw ValueError("assemble: empty query plan");
  for (int a = 0; a < ndim; ++a) {
    const std::size_t ua = static_cast<std::size_t>(a);
    const std::int64_t last = plan.start[ua] + (plan.count[ua] - 1) * plan.stride[ua];
    if (plan.start[ua] < margins[ua] || last > dims[ua] - 1 - margins[ua])
      throw ValueError("assemble: query plan reaches closer to the boundary than the stencil radius");
  }

  const auto convolve = (mode == AssemblyMode::Fft) ? fft_convolve : direct_convolve;
  const std::vector<std::int64_t> valid_strides = row_major_strides(valid_dims);
  const int J = lib.size();
  const int C = d.components();

  WeakSystem sys;
  sys.G.resize(Q, J);
  sys.b.resize(Q, C);
  sys.column_map = lib.terms();
  sys.components = C;
  sys.spatial_dims = lib.spatial_dims();
  sys.query_points.reserve(static_cast<std::size_t>(Q));
  for (std::int64_t q = 0; q < Q; ++q) sys.query_points.push_back(plan.point(q));

  std::vector<std::int64_t> query_offsets(static_cast<std::size_t>(Q));
  for (std::int64_t q = 0; q < Q; ++q)
    query_offsets[static_cast<std::size_t>(q)] = valid_offset(plan, q, margins, valid_strides);

  for (int j = 0; j < J; ++j) {
    const std::vector<double> feat = evaluate_pointwise(lib.term(j), d);
    const std::vector<double> corr =
        convolve(feat, dims, term_kernels(lib.term(j), stencils, lib.spatial_dims()));
    for (std::int64_t q = 0; q < Q; ++q)
      sys.G(q, j) = corr[static_cast<std::size_t>(query_offsets[static_cast<std::size_t>(q)])];
  }

  // Response: order-1 weights on the evolution axis, order-0 elsewhere. The
  // integration-by-parts sign in the stencil already makes this -<d/dt phi, U>.
  std::vector<std::vector<double>> bk(static_cast<std::size_t>(ndim));
  for (int a = 0; a < ndim - 1; ++a)
    bk[static_cast<std::size_t>(a)] = stencils[static_cast<std::size_t>(a)].weights[0];
  bk.back() = stencils.back().weights[1];
  const std::int64_t npts = d.num_samples();
  std::vector<double> comp_field(static_cast<std::size_t>(npts));
  for (int c = 0; c < C; ++c) {
    for (std::int64_t i = 0; i < npts; ++i)
      comp_field[static_cast<std::size_t>(i)] = d.values()[static_cast<std::size_t>(i * C + c)];
    const std::vector<double> corr = convolve(comp_field, dims, bk);
    for (std::int64_t q = 0; q < Q; ++q)
      sys.b(q, c) = corr[static_cast<std::size_t>(query_offsets[static_cast<std::size_t>(q)])];
  }

  if (!sys.G.allFinite() || !sys.b.allFinite())
    throw NumericError("assemble: weak system contains non-finite entries");

  // Columns that vanish up to round-off (e.g. derivative features of constant
  // data convolved via FFT) keep factor 1: normalizing by a ~1e-17 maximum
  // would blow the round-off up into a spurious O(1) feature.
  const double matrix_scale =
      std::max(sys.G.cwiseAbs().maxCoeff(), sys.b.cwiseAbs().maxCoeff());
  sys.scale_factors.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    const double s = sys.G.col(j).cwiseAbs().maxCoeff();
    sys.scale_factors[static_cast<std::size_t>(j)] = s > 1e-14 * matrix_scale ? s : 1.0;
  }
  sys.rhs_scale.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const double s = sys.b.col(c).cwiseAbs().maxCoeff();
    sys.rhs_scale[static_cast<std::size_t>(c)] = s > 1e-14 * matrix_scale ? s : 1.0;
  }
  return sys;
}

void dump_csv(const WeakSystem& sys, std::ostream& out) {
  out << "query";
  for (const Term& t : sys.column_map)
    out << ',' << t.name(sys.components, sys.spatial_dims);
  for (int c = 0; c < sys.components; ++c) out << ",ddt(u" << c << ")";
  out << '\n';
  for (Eigen::Index q = 0; q < sys.G.rows(); ++q) {
    const std::vector<std::int64_t>& p = sys.query_points[static_cast<std::size_t>(q)];
    for (std::size_t a = 0; a < p.size(); ++a) out << (a ? ":" : "") << p[a];
    for (Eigen::Index j = 0; j < sys.G.cols(); ++j)
      out << ',' << format_double(sys.G(q, j));
    for (Eigen::Index c = 0; c < sys.b.cols(); ++c)
      out << ',' << format_double(sys.b(q, c));
    out << '\n';
  }
}

}  // namespace weakform

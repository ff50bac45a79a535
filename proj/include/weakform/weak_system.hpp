#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "weakform/dataset.hpp"
#include "weakform/library.hpp"
#include "weakform/stencil.hpp"

namespace weakform {

// Uniformly strided interior query positions: along axis a the points are
// start[a] + i*stride[a] for i = 0..count[a]-1, all at least the stencil
// radius away from both ends of the axis.
struct QueryPlan {
  std::vector<std::int64_t> start;
  std::vector<std::int64_t> stride;
  std::vector<std::int64_t> count;

  std::int64_t total() const;
  // Row-major decode of a flat query index into a grid multi-index.
  std::vector<std::int64_t> point(std::int64_t flat) const;
};

// Plan with the same stride on every axis; margins come from the stencil
// radii. Throws ValueError if some axis has no interior point.
QueryPlan query_plan(const Grid& grid, const std::vector<Stencil>& stencils,
                     std::int64_t stride);

// Picks the largest common stride whose plan still contains at least
// min_count points. Throws ValueError if even stride 1 falls short.
QueryPlan query_plan_for_count(const Grid& grid, const std::vector<Stencil>& stencils,
                               std::int64_t min_count);

// Valid-region separable cross-correlation, FFT-accelerated. Each kernel must
// have odd length 2m+1; the output extent on that axis shrinks by 2m and
// out[q] = sum_t kernel[t] * in[q+t] applied axis by axis.
std::vector<double> fft_convolve(const std::vector<double>& values,
                                 std::span<const std::int64_t> dims,
                                 const std::vector<std::vector<double>>& kernels);

// Nested-loop reference with the same contract as fft_convolve.
std::vector<double> direct_convolve(const std::vector<double>& values,
                                    std::span<const std::int64_t> dims,
                                    const std::vector<std::vector<double>>& kernels);

enum class AssemblyMode { Fft, Direct };

// Weak-form regression system. G and b hold the raw (unscaled) inner
// products; scale_factors / rhs_scale are the per-column max-abs
// normalizers, so scaled_G() and scaled_b() are what a solver should see and
// unscale_coeffs() maps its solution back to physical coefficients.
struct WeakSystem {
  Eigen::MatrixXd G;  // Q x J: row q, column j = signed weak feature <(-1)^|k| d^k phi_q, f_j(U)>
  Eigen::MatrixXd b;  // Q x C: column c = -<d/dt phi_q, U_c>
  std::vector<std::vector<std::int64_t>> query_points;
  std::vector<Term> column_map;
  int components = 0;
  int spatial_dims = 0;
  std::vector<double> scale_factors;  // length J, 1 for identically zero columns
  std::vector<double> rhs_scale;      // length C, 1 for identically zero responses

  Eigen::MatrixXd scaled_G() const;
  Eigen::VectorXd scaled_b(int response) const;
  Eigen::VectorXd unscale_coeffs(const Eigen::VectorXd& w_scaled, int response) const;
};

// Builds the weak system by correlating the per-axis stencils against the
// pointwise features at every query point. stencils must cover every grid
// axis in order (space..., time); the time stencil needs derivative orders 0
// and 1, each spatial stencil the highest order its axis sees in the library.
WeakSystem assemble(const Dataset& d, const FeatureLibrary& lib,
                    const std::vector<Stencil>& stencils, const QueryPlan& plan,
                    AssemblyMode mode = AssemblyMode::Fft);

// Debug dump: header of term names, then one row per query with the raw G
// and b entries (shortest round-trip decimals).
void dump_csv(const WeakSystem& sys, std::ostream& out);

}  // namespace weakform

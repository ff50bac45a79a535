#pragma once

#include <span>

#include <Eigen/Dense>

#include "weakform/dataset.hpp"
#include "weakform/library.hpp"

namespace weakform {

// Method-of-lines solve of p_t = sum_j w_j d^k_j/dx^k_j (x^a_j p^b_j) on one
// spatial axis: pointwise factors on the grid, central differences (zero
// extension beyond the boundary, valid for decaying densities), classical
// RK4 with a step bounded by the stiffest term. Used to cross-check a
// discovered density model against the particle histogram it came from.
Dataset solve_density_pde(const FeatureLibrary& lib, const Eigen::VectorXd& coeffs,
                          std::span<const double> p0, const Axis& x_axis,
                          const Axis& t_axis);

// Mean absolute difference integrated over x, averaged over the shared time
// grid: the density-mismatch score reported by the coarse-graining pipeline.
double density_l1_error(const Dataset& a, const Dataset& b);

}  // namespace weakform

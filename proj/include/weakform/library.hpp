#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "weakform/dataset.hpp"

namespace weakform {

// One candidate right-hand-side feature: a pointwise nonlinearity of the
// state (a monomial over components, optionally weighted by powers of the
// spatial coordinates, or sin/cos of an integer multiple of one component)
// under a spatial derivative multi-index. The derivative always acts on the
// whole pointwise factor, e.g. d^2/dx^2 (x^1 * u^2).
struct Term {
  enum class Kind { Monomial, Sin, Cos };

  Kind kind = Kind::Monomial;
  std::vector<int> powers;       // per component (Monomial only)
  int frequency = 0;             // trig only, >= 1
  int component = 0;             // trig only
  std::vector<int> coord_powers; // per spatial axis; empty means all zero
  std::vector<int> derivative;   // per spatial axis; empty for time-series data

  int total_degree() const;
  int derivative_order() const;
  bool operator==(const Term&) const = default;

  // Value and d/d(u_comp) of the pointwise factor at state u and position x.
  double eval(std::span<const double> u, std::span<const double> x) const;
  double deriv_state(std::span<const double> u, std::span<const double> x, int comp) const;

  std::string name(int components, int spatial_dims) const;
};

class FeatureLibrary {
 public:
  FeatureLibrary() = default;
  FeatureLibrary(int components, int spatial_dims, std::vector<Term> terms);

  int components() const { return components_; }
  int spatial_dims() const { return spatial_dims_; }
  int size() const { return static_cast<int>(terms_.size()); }
  const std::vector<Term>& terms() const { return terms_; }
  const Term& term(int j) const { return terms_.at(j); }
  std::string term_name(int j) const { return terms_.at(j).name(components_, spatial_dims_); }

  // Highest derivative order requested on each spatial axis.
  std::vector<int> max_derivative_per_axis() const;
  bool uses_coordinates() const;

  // Keeps only the given columns (order preserved); used to restrict a
  // library to a fixed support for parameter estimation.
  FeatureLibrary restricted(std::span<const int> keep) const;

  nlohmann::json to_json() const;
  static FeatureLibrary from_json(const nlohmann::json& j);

 private:
  int components_ = 0;
  int spatial_dims_ = 0;
  std::vector<Term> terms_;
};

// All derivative/power pairs d^k/dx^k (u^p) for 0 <= k <= K, 0 <= p <= P on
// single-component 1+1D data; the p = 0 column only appears without a
// derivative, so the count is (K+1)(P+1) - K.
FeatureLibrary pde_poly_library(int max_derivative, int max_power);

// Multivariate monomials of total degree <= max_degree over `components`
// state variables (ordered by degree, then lexicographically), plus sin and
// cos of the listed integer frequencies applied to each component.
FeatureLibrary ode_poly_trig_library(int components, int max_degree,
                                     std::span<const int> trig_frequencies = {});

// Fokker-Planck style library for density data on one spatial axis:
// d^k/dx^k (x^a u^p) for k <= max_derivative, a <= max_coord_power,
// 1 <= p <= max_power, plus the constant term.
FeatureLibrary density_poly_library(int max_derivative, int max_power, int max_coord_power);

// field[i] = term(u(i), x(i)) over the grid (component axis dropped).
std::vector<double> evaluate_pointwise(const Term& term, const Dataset& d);

// field[i] = d(term)/d(u_comp) at (u(i), x(i)); the state Jacobian needed for
// noise propagation through the weak operators.
std::vector<double> evaluate_pointwise_deriv(const Term& term, const Dataset& d, int comp);

}  // namespace weakform

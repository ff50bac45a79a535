#pragma once

#include <vector>

#include "weakform/test_function.hpp"

namespace weakform {

// Quadrature stencil of a test function on a uniform axis. weights[k][i] is
// the coefficient multiplying a sample at offset (i - radius) when forming
// the signed weak inner product (-1)^k <d^k phi, f>: the k-th derivative of
// phi on the local grid times the trapezoid weight (endpoints halved) times
// the spacing, with the (-1)^k integration-by-parts sign already applied.
struct Stencil {
  int radius = 0;
  double spacing = 0.0;
  std::vector<std::vector<double>> weights;

  int max_order() const { return static_cast<int>(weights.size()) - 1; }
  int width() const { return 2 * radius + 1; }
};

// Maps the reference support of f affinely onto [-radius*spacing,
// radius*spacing] and samples derivatives 0..max_order (chain-rule factors
// included).
Stencil discretize(const TestFunction& f, double spacing, int radius, int max_order);

}  // namespace weakform

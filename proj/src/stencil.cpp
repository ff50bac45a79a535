#include "weakform/stencil.hpp"

#include <cmath>
#include <string>

#include "weakform/errors.hpp"

namespace weakform {

Stencil discretize(const TestFunction& f, double spacing, int radius, int max_order) {
  if (!(spacing > 0.0)) throw ValueError("discretize: spacing must be > 0");
  if (max_order < 0) throw ValueError("discretize: max_order must be >= 0");
  if (radius < std::max(max_order, 1))
    throw ValueError("discretize: radius " + std::to_string(radius) +
                     " too small for derivative order " + std::to_string(max_order));
  if (max_order > f.max_derivative())
    throw ValueError("discretize: family supports derivatives up to " +
                     std::to_string(f.max_derivative()));

  double lo = f.support_lo();
  double len = f.support_hi() - lo;
  double half = static_cast<double>(radius) * spacing;
  double scale = len / (2.0 * half);  // d(reference)/d(grid)

  Stencil st;
  st.radius = radius;
  st.spacing = spacing;
  st.weights.assign(static_cast<std::size_t>(max_order) + 1,
                    std::vector<double>(static_cast<std::size_t>(2 * radius + 1)));
  double step = len / static_cast<double>(2 * radius);
  for (int k = 0; k <= max_order; ++k) {
    double chain = std::pow(scale, k);
    double sign = (k % 2 == 0) ? 1.0 : -1.0;
    for (int i = 0; i <= 2 * radius; ++i) {
      double s = lo + static_cast<double>(i) * step;
      double trap = (i == 0 || i == 2 * radius) ? 0.5 : 1.0;
      st.weights[k][i] = sign * f.evaluate(k, s) * chain * trap * spacing;
    }
  }
  return st;
}

}  // namespace weakform

#include "weakform/grid.hpp"

#include <cmath>
#include <string>

#include "weakform/errors.hpp"

namespace weakform {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ValueError("grid needs at least one axis");
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const Axis& ax = axes_[a];
    if (ax.n < 2)
      throw ValueError("grid axis " + std::to_string(a) + ": need n >= 2, got " +
                       std::to_string(ax.n));
    if (!(ax.hi > ax.lo) || !std::isfinite(ax.lo) || !std::isfinite(ax.hi))
      throw ValueError("grid axis " + std::to_string(a) + ": need finite hi > lo");
  }
}

std::int64_t Grid::num_points() const {
  std::int64_t p = 1;
  for (const Axis& ax : axes_) p *= ax.n;
  return p;
}

Grid make_grid(const std::vector<Axis>& axes) { return Grid(axes); }

}  // namespace weakform

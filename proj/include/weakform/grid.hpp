#pragma once

#include <cstdint>
#include <vector>

namespace weakform {

struct Axis {
  std::int64_t n = 0;
  double lo = 0.0;
  double hi = 0.0;

  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  bool operator==(const Axis&) const = default;
};

// Uniform tensor-product grid. Axis order is (space..., time); the last axis
// is always the evolution axis for space-time data, and the only axis for
// time-series data.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  int ndim() const { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(int a) const { return axes_.at(a); }
  std::int64_t axis_size(int a) const { return axes_.at(a).n; }
  double spacing(int a) const { return axes_.at(a).spacing(); }
  double coord(int a, std::int64_t i) const {
    const Axis& ax = axes_.at(a);
    return ax.lo + static_cast<double>(i) * ax.spacing();
  }
  std::int64_t num_points() const;

  bool operator==(const Grid&) const = default;

 private:
  std::vector<Axis> axes_;
};

Grid make_grid(const std::vector<Axis>& axes);

}  // namespace weakform

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "weakform/grid.hpp"

namespace weakform {

// Sampled field on a Grid. Values are stored row-major over the grid axes
// with the component index as the innermost (fastest) dimension, so the
// flat index of (i_0, ..., i_{D-1}, c) is ((i_0*n_1 + i_1)*n_2 + ...)*C + c.
class Dataset {
 public:
  Dataset(Grid grid, int components, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::int64_t num_samples() const { return grid_.num_points(); }

  // Strides over the grid axes in units of doubles (component stride is 1).
  std::vector<std::int64_t> axis_strides() const;

  std::int64_t flat_index(std::span<const std::int64_t> idx, int comp) const;
  double value(std::span<const std::int64_t> idx, int comp) const {
    return values_[flat_index(idx, comp)];
  }

  double rms() const;

 private:
  Grid grid_;
  int components_ = 0;
  std::vector<double> values_;
};

}  // namespace weakform

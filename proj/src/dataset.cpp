#include "weakform/dataset.hpp"

#include <cmath>
#include <string>

#include "weakform/errors.hpp"

namespace weakform {

Dataset::Dataset(Grid grid, int components, std::vector<double> values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  if (components_ < 1) throw ValueError("dataset needs components >= 1");
  std::int64_t expected = grid_.num_points() * components_;
  if (static_cast<std::int64_t>(values_.size()) != expected)
    throw ValueError("dataset value count " + std::to_string(values_.size()) +
                     " does not match grid points * components = " +
                     std::to_string(expected));
  for (double v : values_)
    if (!std::isfinite(v)) throw ValueError("dataset contains non-finite values");
}

std::vector<std::int64_t> Dataset::axis_strides() const {
  int d = grid_.ndim();
  std::vector<std::int64_t> s(d);
  std::int64_t acc = components_;
  for (int a = d - 1; a >= 0; --a) {
    s[a] = acc;
    acc *= grid_.axis_size(a);
  }
  return s;
}

std::int64_t Dataset::flat_index(std::span<const std::int64_t> idx, int comp) const {
  std::int64_t f = 0;
  for (int a = 0; a < grid_.ndim(); ++a) f = f * grid_.axis_size(a) + idx[a];
  return f * components_ + comp;
}

double Dataset::rms() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s / static_cast<double>(values_.size()));
}

}  // namespace weakform

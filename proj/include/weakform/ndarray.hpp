#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace weakform {

inline std::vector<std::int64_t> row_major_strides(std::span<const std::int64_t> dims) {
  std::vector<std::int64_t> s(dims.size());
  std::int64_t acc = 1;
  for (std::size_t a = dims.size(); a-- > 0;) {
    s[a] = acc;
    acc *= dims[a];
  }
  return s;
}

// Calls fn(base_offset) for every 1-D line along `axis` of a row-major array
// with the given dims; elements of a line sit at base_offset + i * stride of
// that axis.
template <class F>
void for_each_line(std::span<const std::int64_t> dims, int axis, F&& fn) {
  std::vector<std::int64_t> strides = row_major_strides(dims);
  std::vector<std::int64_t> idx(dims.size(), 0);
  while (true) {
    std::int64_t base = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) base += idx[a] * strides[a];
    fn(base, strides[static_cast<std::size_t>(axis)]);
    int a = static_cast<int>(dims.size()) - 1;
    for (; a >= 0; --a) {
      if (a == axis) continue;
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
}

}  // namespace weakform

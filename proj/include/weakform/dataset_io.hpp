#pragma once

#include <string>

#include "weakform/dataset.hpp"

namespace weakform {

enum class FileFormat { Csv, Binary };

// CSV layout: a single header line
//   # grid: n1 lo1 hi1 ; n2 lo2 hi2 ; ... ; components: c
// followed by one sample per row (components comma-separated) in row-major
// grid order. Values use shortest round-trip decimal formatting.
//
// Binary layout: magic "WFSD", u32 version (1), u32 axis count, then per axis
// u64 n / f64 lo / f64 hi, then u64 component count, then the value block as
// little-endian f64 in the same row-major order.
void write_dataset(const Dataset& d, const std::string& path, FileFormat format);
Dataset read_dataset(const std::string& path, FileFormat format);

std::string format_double(double v);  // shortest round-trip decimal
double parse_double(const std::string& s);

}  // namespace weakform

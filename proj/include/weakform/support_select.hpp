#pragma once

#include <optional>
#include <vector>

#include "weakform/dataset.hpp"
#include "weakform/test_function.hpp"

namespace weakform {

struct SupportSelectOptions {
  int max_order = 1;           // highest derivative the stencil must carry
  double attenuation = 1e-4;   // required spectral decay of phi at the corner
  int min_radius = 0;          // 0 = default max_order + 1
  int max_radius = 0;          // 0 = default n/2 - 1
  std::optional<TestFunction> family;  // default poly_bump(max_order + 3)
};

struct SupportSelection {
  int radius = 0;
  int corner_wavenumber = 0;
  bool degenerate = false;  // constant data or no detectable spectral corner
};

// Power spectrum along `axis`, averaged over every line (all other indices
// and components); entry k is |DFT bin k|^2 / n for k = 0..n/2.
std::vector<double> averaged_power_spectrum(const Dataset& d, int axis);

// Picks the test-function support half-width for one axis: locates the
// wavenumber where the cumulative log-spectrum switches slope (signal band
// giving way to the noise floor) and returns the smallest radius whose
// discretized window attenuates that wavenumber below `attenuation` times
// its spectral peak. Scale invariant; more noise never shrinks the radius.
SupportSelection select_support(const Dataset& d, int axis,
                                const SupportSelectOptions& opt = {});

}  // namespace weakform

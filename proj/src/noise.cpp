#include "weakform/noise.hpp"

#include "weakform/errors.hpp"
#include "weakform/rng.hpp"

namespace weakform {

Dataset add_noise(const Dataset& d, const NoiseSpec& spec) {
  if (spec.level < 0.0) throw ValueError("noise level must be >= 0");
  double sigma = spec.level * d.rms();
  std::vector<double> v = d.values();
  Rng rng(spec.seed);
  for (double& x : v) x += sigma * rng.normal();
  return Dataset(d.grid(), d.components(), std::move(v));
}

}  // namespace weakform

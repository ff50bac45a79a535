#pragma once

#include <cstdint>

#include "weakform/dataset.hpp"

namespace weakform {

enum class NoiseKind { GaussianAdditive };

// Noise level is the ratio of the noise standard deviation to the RMS of the
// clean signal, so level = 0.5 means sigma = 0.5 * rms(clean).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::GaussianAdditive;
  double level = 0.0;
  std::uint64_t seed = 0;
};

Dataset add_noise(const Dataset& d, const NoiseSpec& spec);

}  // namespace weakform

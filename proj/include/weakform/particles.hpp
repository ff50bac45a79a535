#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weakform/dataset.hpp"

namespace weakform {

// Scalar coefficient function carrying the name it was configured with, so
// emitted run configs stay self-describing.
struct CoefficientFn {
  std::string name;
  std::function<double(double)> fn;
};

// First-order interacting-particle setup dX = drift(X) dt + sqrt(2 D(X) dt) xi.
// Under this convention the mean-field density solves
// p_t = -(drift p)_x + (D p)_xx.
struct ParticleEnsemble {
  std::int64_t n = 0;
  std::vector<double> positions;  // initial positions, length n
  CoefficientFn drift;
  CoefficientFn diffusion;
  std::uint64_t seed = 0;
};

// Ornstein-Uhlenbeck ensemble: drift -theta x, constant diffusion, initial
// positions drawn from N(0, init_std^2).
ParticleEnsemble make_ou_ensemble(std::int64_t n, double theta, double diffusion,
                                  double init_std, std::uint64_t seed);

// Zero drift with oscillatory diffusivity D(x) = mean + amplitude*sin(omega x),
// the setup whose large-omega limit has a constant effective diffusivity.
ParticleEnsemble make_oscillatory_ensemble(std::int64_t n, double mean,
                                           double amplitude, double omega,
                                           double init_std, std::uint64_t seed);

struct ParticleTrajectories {
  std::vector<double> times;
  std::vector<std::vector<double>> frames;  // one position array per save time
};

// Euler-Maruyama with per-block seeded streams (results do not depend on the
// thread count or schedule). dt_internal is rounded to divide the save
// interval. Throws NumericError on non-finite positions, ValueError when the
// diffusion goes negative.
ParticleTrajectories simulate_ips(const ParticleEnsemble& ensemble, const Axis& t_axis,
                                  double dt_internal, int threads = 0);

// Per-slice histogram density: bin i is centered on grid point x_i with
// width spacing, density = count/(n*spacing). The fraction of samples
// falling outside the bins is written to *outside_fraction when given;
// above 1% it is an error.
Dataset histogram_density(const ParticleTrajectories& traj, const Axis& x_axis,
                          double* outside_fraction = nullptr);

}  // namespace weakform

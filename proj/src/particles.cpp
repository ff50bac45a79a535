#include "weakform/particles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "weakform/errors.hpp"
#include "weakform/rng.hpp"

namespace weakform {

ParticleEnsemble make_ou_ensemble(std::int64_t n, double theta, double diffusion,
                                  double init_std, std::uint64_t seed) {
  if (n < 1) throw ValueError("particle ensemble needs at least one particle");
  if (diffusion < 0.0) throw ValueError("diffusion must be nonnegative");
  ParticleEnsemble e;
  e.n = n;
  e.seed = seed;
  e.drift = {"ou_drift(theta=" + std::to_string(theta) + ")",
             [theta](double x) { return -theta * x; }};
  e.diffusion = {"constant(" + std::to_string(diffusion) + ")",
                 [diffusion](double) { return diffusion; }};
  e.positions.resize(static_cast<std::size_t>(n));
  Rng rng(derive_seed(seed, 0));
  for (double& x : e.positions) x = init_std * rng.normal();
  return e;
}

ParticleEnsemble make_oscillatory_ensemble(std::int64_t n, double mean,
                                           double amplitude, double omega,
                                           double init_std, std::uint64_t seed) {
  if (n < 1) throw ValueError("particle ensemble needs at least one particle");
  if (mean - std::abs(amplitude) < 0.0)
    throw ValueError("oscillatory diffusivity must stay nonnegative");
  ParticleEnsemble e;
  e.n = n;
  e.seed = seed;
  e.drift = {"zero", [](double) { return 0.0; }};
  e.diffusion = {"oscillatory(mean=" + std::to_string(mean) +
                     ",amp=" + std::to_string(amplitude) +
                     ",omega=" + std::to_string(omega) + ")",
                 [mean, amplitude, omega](double x) {
                   return mean + amplitude * std::sin(omega * x);
                 }};
  e.positions.resize(static_cast<std::size_t>(n));
  Rng rng(derive_seed(seed, 0));
  for (double& x : e.positions) x = init_std * rng.normal();
  return e;
}

ParticleTrajectories simulate_ips(const ParticleEnsemble& ensemble, const Axis& t_axis,
                                  double dt_internal, int threads) {
  if (ensemble.n < 1 || static_cast<std::int64_t>(ensemble.positions.size()) != ensemble.n)
    throw ValueError("simulate_ips: ensemble positions do not match the particle count");
  if (!ensemble.drift.fn || !ensemble.diffusion.fn)
    throw ValueError("simulate_ips: drift and diffusion must be set");
  if (t_axis.n < 2) throw ValueError("simulate_ips: need at least two save times");
  if (!(t_axis.hi > t_axis.lo)) throw ValueError("simulate_ips: time axis must be increasing");
  const double save_dt = t_axis.spacing();
  if (!(dt_internal > 0.0) || dt_internal > save_dt * (1.0 + 1e-12))
    throw ValueError("simulate_ips: internal step must be positive and at most the save interval");

  const std::int64_t sub = std::max<std::int64_t>(1, std::llround(save_dt / dt_internal));
  const double dt = save_dt / static_cast<double>(sub);
  const double sq = std::sqrt(2.0 * dt);

  ParticleTrajectories traj;
  traj.times.resize(static_cast<std::size_t>(t_axis.n));
  for (std::int64_t i = 0; i < t_axis.n; ++i)
    traj.times[static_cast<std::size_t>(i)] = t_axis.lo + static_cast<double>(i) * save_dt;
  traj.frames.assign(static_cast<std::size_t>(t_axis.n),
                     std::vector<double>(static_cast<std::size_t>(ensemble.n)));
  traj.frames[0] = ensemble.positions;

  constexpr std::int64_t kBlock = 4096;  // seed granularity, fixed for reproducibility
  const std::int64_t blocks = (ensemble.n + kBlock - 1) / kBlock;
  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = static_cast<int>(std::min<std::int64_t>(nthreads, blocks));

  std::atomic<bool> nonfinite{false};
  std::atomic<bool> negative_diffusion{false};

  auto run_block = [&](std::int64_t blk) {
    const std::int64_t lo = blk * kBlock;
    const std::int64_t hi = std::min(ensemble.n, lo + kBlock);
    Rng rng(derive_seed(ensemble.seed, static_cast<std::uint64_t>(blk) + 1));
    std::vector<double> x(traj.frames[0].begin() + lo, traj.frames[0].begin() + hi);
    for (std::size_t s = 1; s < traj.frames.size(); ++s) {
      for (std::int64_t step = 0; step < sub; ++step) {
        for (double& xi : x) {
          const double D = ensemble.diffusion.fn(xi);
          if (D < 0.0) {
            negative_diffusion.store(true, std::memory_order_relaxed);
            return;
          }
          xi += ensemble.drift.fn(xi) * dt + sq * std::sqrt(D) * rng.normal();
        }
      }
      for (double xi : x)
        if (!std::isfinite(xi)) {
          nonfinite.store(true, std::memory_order_relaxed);
          return;
        }
      std::copy(x.begin(), x.end(), traj.frames[s].begin() + lo);
    }
  };

  if (nthreads == 1) {
    for (std::int64_t blk = 0; blk < blocks; ++blk) run_block(blk);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (std::int64_t blk = next.fetch_add(1); blk < blocks; blk = next.fetch_add(1))
          run_block(blk);
      });
    for (std::thread& t : pool) t.join();
  }
  if (negative_diffusion.load())
    throw ValueError("simulate_ips: diffusion went negative along a trajectory");
  if (nonfinite.load())
    throw NumericError("simulate_ips: particle position blew up");
  return traj;
}

Dataset histogram_density(const ParticleTrajectories& traj, const Axis& x_axis,
                          double* outside_fraction) {
  if (traj.frames.empty() || traj.times.size() != traj.frames.size())
    throw ValueError("histogram_density: empty or inconsistent trajectories");
  if (x_axis.n < 2) throw ValueError("histogram_density: need at least two bins");
  const std::int64_t nx = x_axis.n;
  const std::int64_t nt = static_cast<std::int64_t>(traj.times.size());
  const double dx = x_axis.spacing();
  const double lo_edge = x_axis.lo - 0.5 * dx;

  std::vector<double> values(static_cast<std::size_t>(nx * nt), 0.0);
  std::int64_t outside = 0, total = 0;
  for (std::int64_t s = 0; s < nt; ++s) {
    const std::vector<double>& frame = traj.frames[static_cast<std::size_t>(s)];
    const double norm = 1.0 / (static_cast<double>(frame.size()) * dx);
    total += static_cast<std::int64_t>(frame.size());
    for (double x : frame) {
      const double pos = (x - lo_edge) / dx;
      if (pos < 0.0 || pos >= static_cast<double>(nx)) {
        ++outside;
        continue;
      }
      const std::int64_t bin = static_cast<std::int64_t>(pos);
      values[static_cast<std::size_t>(bin * nt + s)] += norm;
    }
  }
  const double frac = total > 0 ? static_cast<double>(outside) / static_cast<double>(total) : 0.0;
  if (outside_fraction) *outside_fraction = frac;
  if (frac > 0.01)
    throw ValueError("histogram_density: " + std::to_string(100.0 * frac) +
                     "% of samples fall outside the bin range");

  const double t_lo = traj.times.front();
  const double t_hi = traj.times.back();
  const Axis t{nt, t_lo, t_hi};
  return Dataset(make_grid({x_axis, t}), 1, std::move(values));
}

}  // namespace weakform

#pragma once

#include "dampedlab/classical/orbits.hpp"

#include <thread>

namespace dampedlab::classical {

inline double birkhoff_average(const TorusMap& map, const Observable& q, const TorusPoint& rho, int n,
                               bool symmetric = false) {
  if (n < 1) throw Error("birkhoff_average: n must be >= 1");
  TorusPoint r = symmetric ? evolve(map, rho, -(n / 2)) : rho;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    s += q(r.x, r.p);
    r = map.step(r);
  }
  return s / n;
}

struct SamplingSpec {
  int grid = 512;        // grid x grid uniform lattice
  int max_period = 12;   // periodic orbits used to refine the extrema (linear maps)
};

struct Asymptotics {
  double q_minus = 0.0;
  double q_plus = 0.0;
  double q_bar = 0.0;
  double grid_min = 0.0;  // extrema of the finite-time average over the lattice
  double grid_max = 0.0;
  int t_max = 0;
  std::optional<PeriodicOrbit> argmax_orbit;
  std::optional<PeriodicOrbit> argmin_orbit;
};

/// Lattice finite-time extrema plus periodic-orbit refinement. For linear maps q_plus/q_minus are the
/// best orbit averages (these converge to the asymptotic values from inside); the lattice extrema
/// are reported alongside. Perturbed maps fall back to the lattice extrema.
inline Asymptotics asymptotics(const TorusMap& map, const Observable& q, int t_max, const SamplingSpec& spec = {}) {
  if (t_max < 1) throw Error("asymptotics: t_max must be >= 1");
  if (spec.grid < 1) throw Error("asymptotics: empty sampling grid");
  Asymptotics a;
  a.t_max = t_max;
  a.q_bar = q.mean();
  if (q.is_constant()) {
    a.q_minus = a.q_plus = a.grid_min = a.grid_max = a.q_bar;
    return a;
  }
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (int i = 0; i < spec.grid; ++i)
    for (int j = 0; j < spec.grid; ++j) {
      double v = birkhoff_average(map, q, TorusPoint(double(i) / spec.grid, double(j) / spec.grid), t_max);
      gmin = std::min(gmin, v);
      gmax = std::max(gmax, v);
    }
  a.grid_min = gmin;
  a.grid_max = gmax;
  if (map.is_linear() && spec.max_period >= 1) {
    double omin = std::numeric_limits<double>::infinity(), omax = -omin;
    for (auto& o : orbits_up_to(map, spec.max_period)) {
      double v = o.average(q);
      if (v > omax) {
        omax = v;
        a.argmax_orbit = o;
      }
      if (v < omin) {
        omin = v;
        a.argmin_orbit = o;
      }
    }
    a.q_minus = omin;
    a.q_plus = omax;
  } else {
    a.q_minus = gmin;
    a.q_plus = gmax;
  }
  a.q_minus = std::min(a.q_minus, a.q_bar);
  a.q_plus = std::max(a.q_plus, a.q_bar);
  return a;
}

inline int default_workers() {
  if (const char* env = std::getenv("DAMPEDLAB_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

/// Monte Carlo estimate of the Liouville measure of {<q>_t >= alpha}. Sample i uses counters
/// (2i, 2i+1) of the seed's stream, so the result does not depend on the worker count.
inline double deviation_volume(const TorusMap& map, const Observable& q, int t, double alpha, std::int64_t samples,
                               std::uint64_t seed, bool symmetric = false, int workers = 0) {
  if (samples < 1) throw Error("deviation_volume: samples must be >= 1");
  if (workers <= 0) workers = default_workers();
  CounterRng rng(seed, 0x6465766961ULL);
  std::vector<std::int64_t> hits(workers, 0);
  auto job = [&](int w) {
    std::int64_t lo = samples * w / workers, hi = samples * (w + 1) / workers, h = 0;
    for (std::int64_t i = lo; i < hi; ++i) {
      TorusPoint r(rng.uniform(2 * std::uint64_t(i)), rng.uniform(2 * std::uint64_t(i) + 1));
      if (birkhoff_average(map, q, r, t, symmetric) >= alpha) ++h;
    }
    hits[w] = h;
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(job, w);
    for (auto& th : pool) th.join();
  }
  return double(std::accumulate(hits.begin(), hits.end(), std::int64_t(0))) / double(samples);
}

} // namespace dampedlab::classical

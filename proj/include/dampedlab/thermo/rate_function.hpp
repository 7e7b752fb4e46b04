#pragma once

#include "dampedlab/thermo/pressure.hpp"

#include <boost/math/tools/minima.hpp>

#include <map>

namespace dampedlab::thermo {

struct RateFunctionTable {
  static constexpr double kSentinel = -std::numeric_limits<double>::infinity();
  static constexpr double kClamp = -50.0;

  std::vector<double> s_grid;
  std::vector<double> H;
  double q_minus = 0.0, q_plus = 0.0, q_bar = 0.0;
  std::vector<double> beta_grid;
  std::vector<double> pressure_values;  // P(beta q - phi_plus) on beta_grid
  bool concavity_warning = false;
  double max_concavity_violation = 0.0;

  static bool is_sentinel(double h) { return !(h > kClamp); }

  /// Piecewise-linear interpolation; sentinel outside the domain.
  double at(double s) const {
    const double tol = 1e-12 * std::max(1.0, std::fabs(q_plus - q_minus));
    if (s < q_minus - tol || s > q_plus + tol || s_grid.empty()) return kSentinel;
    if (s_grid.size() == 1) return H[0];
    auto it = std::lower_bound(s_grid.begin(), s_grid.end(), s);
    if (it == s_grid.begin()) return H.front();
    if (it == s_grid.end()) return H.back();
    std::size_t i = std::size_t(it - s_grid.begin());
    double w = (s - s_grid[i - 1]) / (s_grid[i] - s_grid[i - 1]);
    if (is_sentinel(H[i - 1]) || is_sentinel(H[i])) return w < 0.5 ? H[i - 1] : H[i];
    return (1 - w) * H[i - 1] + w * H[i];
  }

  /// sup_s [H(s) + beta s] over the finite table entries.
  double retransform(double beta) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s_grid.size(); ++i)
      if (!is_sentinel(H[i])) best = std::max(best, H[i] + beta * s_grid[i]);
    return best;
  }
};

struct RateOptions {
  std::vector<double> beta_grid;  // default: 101 points on [-20, 20]
  std::vector<double> s_grid;     // default: 201 Chebyshev-Lobatto points on [q_minus, q_plus]
  int n_min = 6, n_max = 14;
  double concavity_tol = 1e-5;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

/// Lobatto nodes, denser near the ends where H is steep.
inline std::vector<double> lobatto_grid(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? a : 0.5 * (a + b) - 0.5 * (b - a) * std::cos(kPi * i / (n - 1));
  if (n > 1) {
    v.front() = a;
    v.back() = b;
  }
  return v;
}

/// H(s) = inf_beta [P(beta q - phi_plus) - beta s] on the interior; the endpoints take the orbit-set
/// pressure of -phi_plus on the extremal orbits.
inline RateFunctionTable rate_function(const TorusMap& map, const Observable& q,
                                       const classical::Asymptotics& asym, RateOptions opt = {}) {
  RateFunctionTable t;
  t.q_minus = asym.q_minus;
  t.q_plus = asym.q_plus;
  t.q_bar = q.mean();
  if (q.is_constant() || t.q_plus - t.q_minus < 1e-14) {
    t.s_grid = {t.q_bar};
    t.H = {0.0};
    t.q_minus = t.q_plus = t.q_bar;
    return t;
  }
  if (opt.beta_grid.empty()) opt.beta_grid = linspace(-20.0, 20.0, 101);
  if (opt.s_grid.empty()) opt.s_grid = lobatto_grid(t.q_minus, t.q_plus, 201);
  std::sort(opt.beta_grid.begin(), opt.beta_grid.end());
  std::sort(opt.s_grid.begin(), opt.s_grid.end());

  OrbitSums sums(map, q, opt.n_min, opt.n_max);
  std::map<double, double> cache;
  auto P = [&](double beta) {
    auto it = cache.find(beta);
    if (it != cache.end()) return it->second;
    double v = sums.value(beta, -1.0);
    cache.emplace(beta, v);
    return v;
  };
  t.beta_grid = opt.beta_grid;
  for (double b : opt.beta_grid) t.pressure_values.push_back(P(b));

  const double span = t.q_plus - t.q_minus;
  const double etol = 1e-12 * std::max(1.0, span);
  for (double s : opt.s_grid) {
    t.s_grid.push_back(s);
    if (s < t.q_minus - etol || s > t.q_plus + etol) {
      t.H.push_back(RateFunctionTable::kSentinel);
      continue;
    }
    if (std::fabs(s - t.q_plus) <= etol && asym.argmax_orbit) {
      t.H.push_back(pressure_on_orbit_set(map, {*asym.argmax_orbit}, Potential{Observable{}, -1.0}));
      continue;
    }
    if (std::fabs(s - t.q_minus) <= etol && asym.argmin_orbit) {
      t.H.push_back(pressure_on_orbit_set(map, {*asym.argmin_orbit}, Potential{Observable{}, -1.0}));
      continue;
    }
    const auto& bg = opt.beta_grid;
    std::size_t best = 0;
    double gbest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bg.size(); ++i) {
      double g = P(bg[i]) - bg[i] * s;
      if (g < gbest) gbest = g, best = i;
    }
    // Brent minimisation of the convex function beta -> P(beta) - beta s on the bracketing cell.
    if (best > 0 && best + 1 < bg.size()) {
      auto r = boost::math::tools::brent_find_minima([&](double b) { return sums.value(b, -1.0) - b * s; },
                                                     bg[best - 1], bg[best + 1], 40);
      gbest = std::min(gbest, r.second);
    }
    double h = std::min(gbest, 0.0);
    t.H.push_back(h < RateFunctionTable::kClamp ? RateFunctionTable::kSentinel : h);
  }
  // Concavity of the finite part: slopes must not increase.
  for (std::size_t i = 1; i + 1 < t.s_grid.size(); ++i) {
    if (RateFunctionTable::is_sentinel(t.H[i - 1]) || RateFunctionTable::is_sentinel(t.H[i]) ||
        RateFunctionTable::is_sentinel(t.H[i + 1]))
      continue;
    double s1 = (t.H[i] - t.H[i - 1]) / (t.s_grid[i] - t.s_grid[i - 1]);
    double s2 = (t.H[i + 1] - t.H[i]) / (t.s_grid[i + 1] - t.s_grid[i]);
    double viol = (s2 - s1) * 0.5 * (t.s_grid[i + 1] - t.s_grid[i - 1]);
    t.max_concavity_violation = std::max(t.max_concavity_violation, viol);
  }
  t.concavity_warning = t.max_concavity_violation > opt.concavity_tol;
  return t;
}

} // namespace dampedlab::thermo

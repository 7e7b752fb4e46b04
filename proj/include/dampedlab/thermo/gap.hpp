#pragma once

#include "dampedlab/thermo/rate_function.hpp"

namespace dampedlab::thermo {

struct Condition {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double margin() const { return rhs - lhs; }
};

struct GapReport {
  Condition pressure_cond;   // P(q - phi+/2) < q_plus
  Condition thickness_cond;  // P(-phi+, K) < (d-1)(nu_min/2 - lambda_max)
  struct {
    double h_top_K = 0.0;
    double threshold = 0.0;
    bool holds = false;
  } constcurv_cond;          // h_top(K) < lambda/2
  struct {
    double value = 0.0;
    bool holds = false;
  } conjecture_cond;         // P(-phi+/2, K) < 0
  double q_plus = 0.0;
  double lambda_max = 0.0;
  double nu_min = 0.0;
  std::vector<std::pair<double, double>> beta_curve;  // (alpha, beta(alpha)) for alpha in (q_bar, q_plus)
};

inline constexpr int kPhaseDim = 2;  // d in the (d-1) factors; the torus map has one unstable direction

/// beta(alpha) = (d-1)(nu_min/2 - lambda_max) - H(alpha).
inline double beta_of_alpha(const RateFunctionTable& t, double alpha, double lambda_max, double nu_min) {
  double h = t.at(alpha);
  if (RateFunctionTable::is_sentinel(h)) return std::numeric_limits<double>::infinity();
  return (kPhaseDim - 1) * (0.5 * nu_min - lambda_max) - h;
}

inline GapReport gap_report(const TorusMap& map, const Observable& q, const std::vector<PeriodicOrbit>& K,
                            const RateFunctionTable* table = nullptr, int n_min = 6, int n_max = 14) {
  if (K.empty()) throw Error("gap_report: empty least-damped orbit set");
  GapReport g;
  auto hyp = classical::hyperbolicity_data(map);
  g.lambda_max = hyp.lambda_max;
  g.nu_min = hyp.nu_min;
  g.q_plus = pressure_on_orbit_set(map, K, Potential{q, 0.0});

  g.pressure_cond.lhs = pressure(map, Potential{q, -0.5}, n_min, n_max).value;
  g.pressure_cond.rhs = g.q_plus;
  g.pressure_cond.holds = g.pressure_cond.lhs < g.pressure_cond.rhs;

  g.thickness_cond.lhs = pressure_on_orbit_set(map, K, Potential{Observable{}, -1.0});
  g.thickness_cond.rhs = (kPhaseDim - 1) * (0.5 * g.nu_min - g.lambda_max);
  g.thickness_cond.holds = g.thickness_cond.lhs < g.thickness_cond.rhs;

  g.constcurv_cond.h_top_K = 0.0;  // finite orbit union
  g.constcurv_cond.threshold = 0.5 * g.lambda_max;
  g.constcurv_cond.holds = g.constcurv_cond.h_top_K < g.constcurv_cond.threshold;

  g.conjecture_cond.value = pressure_on_orbit_set(map, K, Potential{Observable{}, -0.5});
  g.conjecture_cond.holds = g.conjecture_cond.value < 0.0;

  if (table && table->q_plus > table->q_bar) {
    for (double s : table->s_grid)
      if (s > table->q_bar && s <= table->q_plus)
        g.beta_curve.emplace_back(s, beta_of_alpha(*table, s, g.lambda_max, g.nu_min));
  }
  return g;
}

struct ScaleScan {
  std::vector<std::pair<double, double>> values;  // (C, P(-C a - phi+/2))
  double limit = 0.0;                             // P(-phi+/2, K)
};

/// C -> P(-C a - phi+/2); the limit assumes a vanishes on K.
inline ScaleScan damping_scale_scan(const TorusMap& map, const Observable& a, const std::vector<double>& C,
                                    const std::vector<PeriodicOrbit>& K, int n_min = 6, int n_max = 14) {
  ScaleScan s;
  OrbitSums sums(map, a, n_min, n_max);
  for (double c : C) s.values.emplace_back(c, sums.value(-c, -0.5));
  s.limit = pressure_on_orbit_set(map, K, Potential{Observable{}, -0.5});
  return s;
}

} // namespace dampedlab::thermo

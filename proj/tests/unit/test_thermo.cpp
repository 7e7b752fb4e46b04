#include "dampedlab/thermo.hpp"

#include <gtest/gtest.h>

using namespace dampedlab;
using namespace dampedlab::classical;
using namespace dampedlab::thermo;

namespace {

const double kLogLambda = std::log((3.0 + std::sqrt(5.0)) / 2.0);

TorusMap cat() { return TorusMap::linear(2, 1, 1, 1); }

Observable damping(double C) {
  // -C * (1 - cos 2 pi x) / 2
  return -C * (0.5 * (Observable::constant(1.0) + (-1.0) * Observable::cosine(1, 0)));
}

struct Shared {
  Observable q = Observable::cosine(1, 0);
  Asymptotics asym = asymptotics(cat(), q, 12, {64, 12});
  RateFunctionTable table = rate_function(cat(), q, asym);
};

const Shared& shared() {
  static Shared s;
  return s;
}

} // namespace

TEST(Pressure, TopologicalEntropy) {
  auto e = pressure(cat(), Potential{Observable{}, 0.0});
  EXPECT_NEAR(e.value, kLogLambda, 1e-3);
  EXPECT_NEAR(kLogLambda, 0.9624, 1e-4);
  // Oracle: log of the closed-form count ratio.
  double cf = std::log(fixed_point_count_closed_form({2, 1, 1, 1}, 14) / fixed_point_count_closed_form({2, 1, 1, 1}, 8)) / 6;
  EXPECT_NEAR(e.value, cf, 1e-10);
  EXPECT_LE(std::fabs(e.value - e.partial.back().second), e.error_est);
  EXPECT_EQ(e.partial.size(), 9u);
}

TEST(Pressure, MinusPhiPlusIsZero) {
  auto e = pressure(cat(), Potential{Observable{}, -1.0});
  EXPECT_NEAR(e.value, 0.0, 1e-3);
  // Oracle: (1/n) log((lambda^n + lambda^-n - 2) / lambda^n).
  double n = 14, lam = std::exp(kLogLambda);
  EXPECT_NEAR(e.partial.back().second, std::log((std::pow(lam, n) + std::pow(lam, -n) - 2) / std::pow(lam, n)) / n, 1e-12);
}

TEST(Pressure, ConstantShiftExactAtEveryPartial) {
  auto g = Observable::cosine(1, 0) + Observable::cosine(1, 1, 0.3);
  auto a = pressure(cat(), Potential{g, -0.5});
  auto b = pressure(cat(), Potential{g + 0.37, -0.5});
  for (std::size_t i = 0; i < a.partial.size(); ++i) EXPECT_NEAR(b.partial[i].second, a.partial[i].second + 0.37, 1e-12);
  EXPECT_NEAR(b.value, a.value + 0.37, 1e-11);
}

TEST(Pressure, MonotoneInPotential) {
  auto f = Observable::cosine(1, 0, 0.5);
  auto g = f + Observable::cosine(0, 1, 0.2) + 0.25;  // g >= f pointwise
  EXPECT_LE(pressure(cat(), Potential{f, -0.5}).value, pressure(cat(), Potential{g, -0.5}).value);
}

TEST(Pressure, ConvexInBeta) {
  const auto& t = shared().table;
  for (std::size_t i = 1; i + 1 < t.beta_grid.size(); ++i) {
    double d2 = t.pressure_values[i + 1] - 2 * t.pressure_values[i] + t.pressure_values[i - 1];
    EXPECT_GE(d2, -1e-6) << "beta=" << t.beta_grid[i];
  }
}

TEST(Pressure, OverflowCapAndPerturbed) {
  EXPECT_THROW(pressure(cat(), Potential{}, 6, 20), Error);
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(1, 0));
  EXPECT_THROW(pressure(pert, Potential{}), Error);
}

TEST(OrbitSetPressure, Examples) {
  auto origin = periodic_orbits(cat(), 1);
  EXPECT_NEAR(pressure_on_orbit_set(cat(), origin, Potential{Observable{}, -0.5}), -0.4812, 1e-4);
  auto orbs = periodic_orbits(cat(), 3);
  EXPECT_EQ(pressure_on_orbit_set(cat(), orbs, Potential{Observable{}, 0.0}), 0.0);
  // Two orbits with averages -1 and -2 of f: the maximum wins.
  auto q = Observable::cosine(1, 0) + (-2.0);  // origin average -1; (1/2,0) orbit average below
  std::vector<PeriodicOrbit> two{origin[0]};
  for (const auto& o : orbs)
    if (o.period == 3) two.push_back(o);
  double best = -1e9;
  for (const auto& o : two) best = std::max(best, o.average(q));
  EXPECT_NEAR(pressure_on_orbit_set(cat(), two, Potential{q, 0.0}), best, 1e-14);
  EXPECT_NEAR(best, -1.0, 1e-14);
  EXPECT_THROW(pressure_on_orbit_set(cat(), {}, Potential{}), Error);
}

TEST(RateFunction, VanishesAtMeanAndNegativeElsewhere) {
  const auto& t = shared().table;
  EXPECT_NEAR(t.at(t.q_bar), 0.0, 1e-3);
  for (std::size_t i = 0; i < t.s_grid.size(); ++i) EXPECT_LE(t.H[i], 1e-12);
  EXPECT_FALSE(t.concavity_warning) << t.max_concavity_violation;
  EXPECT_TRUE(RateFunctionTable::is_sentinel(t.at(t.q_plus + 0.01)));
  EXPECT_TRUE(RateFunctionTable::is_sentinel(t.at(t.q_minus - 0.01)));
}

TEST(RateFunction, LowerBoundAndEndpoint) {
  const auto& t = shared().table;
  for (double h : t.H)
    if (!RateFunctionTable::is_sentinel(h)) EXPECT_GE(h, -kLogLambda - 1e-9);
  EXPECT_NEAR(t.H.back(), -kLogLambda, 1e-12);
}

TEST(RateFunction, DualityRoundTrip) {
  const auto& t = shared().table;
  double worst = 0;
  for (std::size_t i = 0; i < t.beta_grid.size(); ++i)
    worst = std::max(worst, std::fabs(t.retransform(t.beta_grid[i]) - t.pressure_values[i]));
  EXPECT_LE(worst, 2e-3);
}

TEST(RateFunction, DegenerateConstant) {
  auto q = Observable{};
  auto a = asymptotics(cat(), q, 4, {8, 4});
  auto t = rate_function(cat(), q, a);
  ASSERT_EQ(t.s_grid.size(), 1u);
  EXPECT_EQ(t.at(0.0), 0.0);
  EXPECT_TRUE(RateFunctionTable::is_sentinel(t.at(0.1)));
}

TEST(Gap, ConstantDampingFailsPressureCondition) {
  auto q = Observable::constant(-0.4);
  auto g = gap_report(cat(), q, periodic_orbits(cat(), 1));
  EXPECT_FALSE(g.pressure_cond.holds);
  EXPECT_NEAR(g.pressure_cond.lhs, -0.4 + kLogLambda / 2, 1e-3);
}

TEST(Gap, LinearConditionsAgree) {
  auto K = periodic_orbits(cat(), 1);
  auto g = gap_report(cat(), damping(2.0), K);
  EXPECT_TRUE(g.constcurv_cond.holds);
  EXPECT_EQ(g.constcurv_cond.holds, g.thickness_cond.holds);
  EXPECT_NEAR(g.thickness_cond.lhs, -kLogLambda, 1e-12);
  EXPECT_NEAR(g.thickness_cond.rhs, -kLogLambda / 2, 1e-12);
  EXPECT_TRUE(g.conjecture_cond.holds);
  EXPECT_NEAR(g.conjecture_cond.value, -kLogLambda / 2, 1e-12);
  EXPECT_TRUE(g.pressure_cond.holds);
  EXPECT_NEAR(g.q_plus, 0.0, 1e-14);
}

TEST(Gap, ScaleScanDecreasesToOrbitLimit) {
  auto a = 0.5 * (Observable::constant(1.0) + (-1.0) * Observable::cosine(1, 0));
  auto K = periodic_orbits(cat(), 1);
  auto scan = damping_scale_scan(cat(), a, {0, 1, 2, 4, 8, 16, 64}, K);
  for (std::size_t i = 1; i < scan.values.size(); ++i) EXPECT_LT(scan.values[i].second, scan.values[i - 1].second);
  EXPECT_GT(scan.values.back().second, scan.limit - 1e-6);
  EXPECT_LT(scan.values.back().second - scan.limit, 0.15);
  EXPECT_NEAR(scan.values.front().second, kLogLambda / 2, 1e-3);
}

TEST(Gap, MarginChangesSignContinuously) {
  auto a = 0.5 * (Observable::constant(1.0) + (-1.0) * Observable::cosine(1, 0));
  auto K = periodic_orbits(cat(), 1);
  std::vector<double> Cs;
  for (int i = 0; i <= 40; ++i) Cs.push_back(0.05 * i);
  auto scan = damping_scale_scan(cat(), a, Cs, K);
  int changes = 0;
  for (std::size_t i = 1; i < scan.values.size(); ++i) {
    EXPECT_LT(std::fabs(scan.values[i].second - scan.values[i - 1].second), 0.05);
    if ((scan.values[i].second < 0) != (scan.values[i - 1].second < 0)) ++changes;
  }
  EXPECT_EQ(changes, 1);
}

TEST(Gap, BetaCurveIncreasing) {
  const auto& s = shared();
  auto g = gap_report(cat(), s.q, {*s.asym.argmax_orbit}, &s.table);
  ASSERT_FALSE(g.beta_curve.empty());
  for (std::size_t i = 1; i < g.beta_curve.size(); ++i)
    EXPECT_GE(g.beta_curve[i].second, g.beta_curve[i - 1].second - 1e-6);
}

#include "dampedlab/classical.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace dampedlab;
using namespace dampedlab::classical;

namespace {

const double kLambda = (3.0 + std::sqrt(5.0)) / 2.0;

TorusMap cat() { return TorusMap::linear(2, 1, 1, 1); }

// Brute force: every (i/D, j/D) with (M^n - I)x integral, D = |det(M^n - I)|.
std::set<std::pair<long, long>> brute_fixed_points(const LinearMap& m, int n, long& D) {
  LinearMap p{1, 0, 0, 1};
  for (int k = 0; k < n; ++k) p = m * p;
  long a = p.a - 1, b = p.b, c = p.c, d = p.d - 1;
  D = std::labs(a * d - b * c);
  std::set<std::pair<long, long>> out;
  for (long i = 0; i < D; ++i)
    for (long j = 0; j < D; ++j)
      if ((a * i + b * j) % D == 0 && (c * i + d * j) % D == 0) out.insert({i, j});
  return out;
}

} // namespace

TEST(Evolve, FixedPointAndHalfLattice) {
  auto r = evolve(cat(), TorusPoint(0, 0), 5);
  EXPECT_EQ(r.x, 0.0);
  EXPECT_EQ(r.p, 0.0);
  auto h = evolve(cat(), TorusPoint(0.5, 0.5), 1);
  EXPECT_DOUBLE_EQ(h.x, 0.5);
  EXPECT_DOUBLE_EQ(h.p, 0.0);
}

TEST(Evolve, InvertibilityAndClosure) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(1, 0));
  for (const auto& map : {cat(), pert})
    for (int i = 0; i < 200; ++i) {
      TorusPoint r(u(gen), u(gen));
      auto f = evolve(map, r, 3);
      EXPECT_GE(f.x, 0.0);
      EXPECT_LT(f.x, 1.0);
      EXPECT_GE(f.p, 0.0);
      EXPECT_LT(f.p, 1.0);
      auto b = evolve(map, f, -3);
      EXPECT_LT(torus_dist(b, r), 1e-12);
    }
}

TEST(Evolve, VolumePreservationChiSquare) {
  CounterRng rng(11);
  const int B = 32, S = 200000;
  std::vector<int> h(B * B, 0);
  for (int i = 0; i < S; ++i) {
    auto r = evolve(cat(), TorusPoint(rng.uniform(2 * i), rng.uniform(2 * i + 1)), 4);
    ++h[int(r.x * B) * B + int(r.p * B)];
  }
  double e = double(S) / (B * B), chi = 0;
  for (int c : h) chi += (c - e) * (c - e) / e;
  // 1023 degrees of freedom: the 0.99 quantile is about 1131.
  EXPECT_LT(chi, 1131.0);
}

TEST(Map, RejectsNonHyperbolic) {
  EXPECT_THROW(TorusMap::linear(1, 1, 0, 1), Error);
  EXPECT_THROW(TorusMap::linear(2, 1, 1, 2), Error);
  EXPECT_THROW(TorusMap::perturbed({2, 1, 1, 1}, 1.0, Observable::cosine(1, 0)), Error);
  EXPECT_THROW(TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(0, 1)), Error);
}

TEST(Tangent, LinearIsExact) {
  for (int n : {1, 3, 7}) {
    auto t = tangent_data(cat(), TorusPoint(0.3, 0.7), n);
    EXPECT_NEAR(t.J_plus / std::pow(kLambda, n), 1.0, 1e-12);
    EXPECT_NEAR(t.phi_plus_at_rho, std::log(kLambda), 1e-12);
  }
  EXPECT_NEAR(std::log(kLambda), 0.9624, 1e-4);
  std::vector<double> js;
  for (double x : {0.1, 0.4, 0.77})
    js.push_back(tangent_data(cat(), TorusPoint(x, 1 - x), 5).J_plus);
  for (double j : js) EXPECT_LT(std::fabs(j / js[0] - 1), 1e-10);
}

TEST(Tangent, TinyPerturbationMatchesLinear) {
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 1e-14, Observable::cosine(1, 0));
  ASSERT_FALSE(pert.is_linear());
  TorusPoint r(0.21, 0.62);
  auto a = tangent_data(pert, r, 6), b = tangent_data(cat(), r, 6);
  EXPECT_NEAR(a.J_plus / b.J_plus, 1.0, 1e-10);
  EXPECT_NEAR(a.phi_plus_at_rho, b.phi_plus_at_rho, 1e-10);
  auto d = unstable_direction(pert, r);
  auto e = LinearMap{2, 1, 1, 1}.unstable_direction();
  EXPECT_LT((d - e).norm(), 1e-10);
}

TEST(Tangent, PerturbedDirectionIsInvariant) {
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(1, 0));
  TorusPoint r(0.13, 0.58);
  Eigen::Vector2d v = unstable_direction(pert, r);
  Eigen::Vector2d w = (pert.jacobian(r) * v).normalized();
  Eigen::Vector2d u = unstable_direction(pert, pert.step(r));
  EXPECT_LT(std::fabs(w(0) * u(1) - w(1) * u(0)), 1e-10);
  auto hd = hyperbolicity_data(pert, 6, 16);
  EXPECT_GE(hd.lambda_max, hd.nu_min);
  EXPECT_GT(hd.nu_min, 0.0);
}

TEST(Tangent, IterationCapTooSmallFails) {
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(1, 0));
  EXPECT_THROW(unstable_direction(pert, TorusPoint(0.1, 0.1), TangentOptions{2, 1e-12}), Error);
}

TEST(Birkhoff, ConstantsAndFixedPoint) {
  auto c = Observable::constant(0.7);
  EXPECT_NEAR(birkhoff_average(cat(), c, TorusPoint(0.2, 0.9), 13), 0.7, 1e-15);
  EXPECT_NEAR(birkhoff_average(cat(), Observable::cosine(1, 0), TorusPoint(0, 0), 9), 1.0, 1e-15);
  EXPECT_NEAR(birkhoff_average(cat(), Observable::cosine(1, 0), TorusPoint(0, 0), 9, true), 1.0, 1e-12);
}

TEST(Birkhoff, SymmetricWindow) {
  auto q = Observable::cosine(1, 0) + Observable::cosine(0, 1, 0.5);
  TorusPoint r(0.31, 0.47);
  for (int n : {1, 4, 7}) {
    double s = 0;
    for (int k = -(n / 2); k <= (n + 1) / 2 - 1; ++k) {
      auto p = evolve(cat(), r, k);
      s += q(p.x, p.p);
    }
    EXPECT_NEAR(birkhoff_average(cat(), q, r, n, true), s / n, 1e-10);
  }
}

TEST(Birkhoff, BoundedByRange) {
  auto q = Observable::cosine(1, 0) + Observable::cosine(1, 1, 0.4, 0.3);
  auto [lo, hi] = q.sampled_range(512);
  CounterRng rng(3);
  for (int i = 0; i < 500; ++i) {
    double v = birkhoff_average(cat(), q, TorusPoint(rng.uniform(2 * i), rng.uniform(2 * i + 1)), 1 + i % 17);
    EXPECT_GE(v, lo - 1e-3);
    EXPECT_LE(v, hi + 1e-3);
  }
}

TEST(Birkhoff, ErgodicAverageApproachesMean) {
  auto q = Observable::cosine(1, 0) + Observable::cosine(0, 1, 0.5) + 0.25;
  // Oracle: brute-force Riemann sum of q over a fine grid.
  double grid_mean = 0;
  const int G = 400;
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j) grid_mean += q(double(i) / G, double(j) / G);
  grid_mean /= G * G;
  EXPECT_NEAR(grid_mean, q.mean(), 1e-12);
  // Average over many independent starting points of a length-30 orbit segment.
  CounterRng rng(5);
  double acc = 0;
  const int S = 20000;
  for (int i = 0; i < S; ++i) acc += birkhoff_average(cat(), q, TorusPoint(rng.uniform(2 * i), rng.uniform(2 * i + 1)), 30);
  EXPECT_NEAR(acc / S, grid_mean, 0.01);
}

TEST(Observable, HermitianValidation) {
  std::map<Frequency, cplx> ok{{{1, 0}, {0.5, 0.1}}, {{-1, 0}, {0.5, -0.1}}};
  EXPECT_NO_THROW(Observable::from_coefficients(ok));
  std::map<Frequency, cplx> bad{{{1, 0}, {0.5, 0.1}}};
  EXPECT_THROW(Observable::from_coefficients(bad), Error);
  auto q = Observable::from_coefficients(ok);
  EXPECT_NEAR(q(0.0, 0.3), 1.0, 1e-15);
  EXPECT_NEAR(q.d_dx(0.1, 0.0), -kTwoPi * (std::sin(kTwoPi * 0.1) + 0.2 * std::cos(kTwoPi * 0.1)), 1e-12);
}

TEST(PeriodicOrbits, SmallCounts) {
  EXPECT_EQ(count_points(periodic_orbits(cat(), 1)), 1u);
  EXPECT_EQ(count_points(periodic_orbits(cat(), 2)), 5u);
  auto o1 = periodic_orbits(cat(), 1);
  ASSERT_EQ(o1.size(), 1u);
  EXPECT_EQ(o1[0].points[0], TorusPoint(0, 0));
}

TEST(PeriodicOrbits, CountsMatchClosedForm) {
  for (int n = 1; n <= 14; ++n) {
    auto orbs = periodic_orbits(cat(), n);
    double closed = fixed_point_count_closed_form({2, 1, 1, 1}, n);
    EXPECT_EQ(double(count_points(orbs)), std::round(closed)) << "n=" << n;
    for (const auto& o : orbs) {
      EXPECT_EQ(n % o.period, 0);
      auto back = evolve(cat(), o.points[0], o.period);
      EXPECT_LT(torus_dist(back, o.points[0]), 1e-9);
    }
  }
}

TEST(PeriodicOrbits, MatchBruteForceLattice) {
  for (const LinearMap& m : {LinearMap{2, 1, 1, 1}, LinearMap{1, 1, 1, 2}, LinearMap{3, 2, 4, 3}, LinearMap{-3, 1, -1, 0}}) {
    auto map = TorusMap::linear(m);
    for (int n = 1; n <= 4; ++n) {
      long D;
      auto ref = brute_fixed_points(m, n, D);
      std::set<std::pair<long, long>> got;
      for (const auto& o : periodic_orbits(map, n))
        for (const auto& [u, v] : o.residues) {
          ASSERT_EQ(o.denominator, D);
          got.insert({long(u), long(v)});
        }
      EXPECT_EQ(got, ref) << "n=" << n;
    }
  }
}

TEST(PeriodicOrbits, OverflowCap) {
  EXPECT_THROW(periodic_orbits(cat(), 17), Error);
  EXPECT_THROW(periodic_orbits(cat(), 5, 4), Error);
  auto pert = TorusMap::perturbed({2, 1, 1, 1}, 0.01, Observable::cosine(1, 0));
  EXPECT_THROW(periodic_orbits(pert, 2), Error);
}

TEST(Asymptotics, Constant) {
  auto a = asymptotics(cat(), Observable::constant(-0.2), 5, {16, 6});
  EXPECT_EQ(a.q_minus, -0.2);
  EXPECT_EQ(a.q_bar, -0.2);
  EXPECT_EQ(a.q_plus, -0.2);
}

TEST(Asymptotics, OriginMaximum) {
  // q = -0.3 (1 - cos 2 pi x): zero at the fixed origin, negative elsewhere.
  auto q = -0.3 * (Observable::constant(1.0) + (-1.0) * Observable::cosine(1, 0));
  auto a = asymptotics(cat(), q, 10, {64, 12});
  EXPECT_NEAR(a.q_plus, 0.0, 1e-14);
  EXPECT_LE(a.q_minus, a.q_bar);
  EXPECT_LE(a.q_bar, a.q_plus);
  EXPECT_THROW(asymptotics(cat(), q, 10, {0, 12}), Error);
}

TEST(Asymptotics, CosineAgainstExhaustiveOrbits) {
  auto q = Observable::cosine(1, 0);
  auto a = asymptotics(cat(), q, 10, {64, 6});
  EXPECT_NEAR(a.q_bar, 0.0, 1e-15);
  // Oracle: brute-force fixed points of M^n for n <= 6, averaged along their orbits.
  double best = -1e9, worst = 1e9;
  for (int n = 1; n <= 6; ++n) {
    long D;
    for (auto [i, j] : brute_fixed_points({2, 1, 1, 1}, n, D)) {
      TorusPoint r(double(i) / D, double(j) / D);
      double v = birkhoff_average(cat(), q, r, n);
      best = std::max(best, v);
      worst = std::min(worst, v);
    }
  }
  EXPECT_NEAR(a.q_plus, best, 1e-9);
  EXPECT_NEAR(a.q_minus, worst, 1e-9);
  EXPECT_GE(a.q_plus, 1.0 - 1e-12);
}

TEST(DeviationVolume, Extremes) {
  auto q = Observable::cosine(1, 0);
  EXPECT_EQ(deviation_volume(cat(), q, 5, -1.01, 2000, 1), 1.0);
  EXPECT_EQ(deviation_volume(cat(), q, 5, 1.01, 2000, 1), 0.0);
}

TEST(DeviationVolume, DeterministicAcrossWorkers) {
  auto q = Observable::cosine(1, 0);
  double a = deviation_volume(cat(), q, 8, 0.1, 30001, 42, false, 1);
  double b = deviation_volume(cat(), q, 8, 0.1, 30001, 42, false, 3);
  double c = deviation_volume(cat(), q, 8, 0.1, 30001, 43, false, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_GT(a, 0.0);
  EXPECT_LT(a, 0.5);
}

#include "dampedlab/wave.hpp"

#include <gtest/gtest.h>

using namespace dampedlab;
using namespace dampedlab::wave;

namespace {

DampingProfile raised_cosine() {  // 0.4 (1 + cos 2 pi x)
  return DampingProfile::from_observable(0.4 * (Observable::constant(1.0) + Observable::cosine(1, 0)));
}

// Vanishes on [0.4, 0.6].
DampingProfile strip_gap(int dim = 2) { return DampingProfile::bump(0.0, 0.4, 0.5, dim); }

std::vector<double> grid(double T, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(T * i / n);
  return t;
}

// sigma_max of the 2x2 mode propagator for u'' + 2c u' + k^2 u = 0 in the energy norm.
double mode_norm_closed_form(int k, double c, double t) {
  cplx w = std::sqrt(cplx(double(k) * k - c * c));
  cplx cs = std::cos(w * t), sn = w == 0.0 ? cplx(t) : std::sin(w * t) / w;
  double e = std::exp(-c * t);
  // (u, u_t) map, conjugated by diag(k, 1)
  cplx m11 = e * (cs + c * sn), m12 = e * sn * double(k), m21 = -e * double(k) * sn, m22 = e * (cs - c * sn);
  double f = std::norm(m11) + std::norm(m12) + std::norm(m21) + std::norm(m22);
  double det = std::abs(m11 * m22 - m12 * m21);
  return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4 * det * det))));
}

} // namespace

TEST(Profile, Validation) {
  EXPECT_THROW(DampingProfile::from_observable(Observable::cosine(1, 0)), Error);  // negative somewhere
  EXPECT_THROW(DampingProfile::constant(0.0), Error);
  EXPECT_THROW(DampingProfile::from_observable(Observable::constant(1.0) + Observable::cosine(0, 1, 0.5)), Error);
  auto p = raised_cosine();
  EXPECT_NEAR(p.a_min, 0.0, 1e-12);
  EXPECT_NEAR(p.a_max, 0.8, 1e-12);
  EXPECT_NEAR(p.mean, 0.4, 1e-15);
  auto b = strip_gap(1);
  for (double x = 0.4; x <= 0.6; x += 0.01) EXPECT_EQ(b(x), 0.0);
  // FFT coefficients reproduce the function
  for (double x : {0.05, 0.2, 0.33, 0.9}) {
    cplx s = 0;
    for (int m = -b.M; m <= b.M; ++m) s += b.coeff(m) * std::exp(kI * kTwoPi * double(m) * x);
    EXPECT_NEAR(s.real(), b(x), 1e-10);
  }
}

TEST(Generator, BlockStructureAndErrors) {
  auto g = assemble_generator(raised_cosine(), 8);
  const int m = 17;
  EXPECT_EQ(g.blocks.size(), 1u);
  EXPECT_EQ(g.blocks[0].A.topRightCorner(m, m), CMatrix::Identity(m, m));
  EXPECT_EQ(g.blocks[0].A.topLeftCorner(m, m), CMatrix::Zero(m, m));
  EXPECT_THROW(assemble_generator(raised_cosine(), 3), Error);
  EXPECT_FALSE(g.underresolved);
  EXPECT_TRUE(assemble_generator(strip_gap(1), 8).underresolved);
  EXPECT_EQ(assemble_generator(strip_gap(2), 6).blocks.size(), 13u);
}

TEST(Generator, UndampedSpectrumIsIntegers) {
  // a = 0 is not an admissible profile; build the undamped generator by zeroing the Toeplitz block.
  auto g = assemble_generator(DampingProfile::constant(1.0), 8);
  g.blocks[0].toeplitz.setZero();
  g.blocks[0].A.bottomRightCorner(17, 17).setZero();
  auto s = wave_spectrum(g);
  std::map<int, int> mult;
  for (auto t : s.taus) {
    EXPECT_NEAR(t.imag(), 0.0, 1e-7);
    EXPECT_NEAR(t.real(), std::round(t.real()), 1e-7);
    mult[int(std::lround(t.real()))]++;
  }
  EXPECT_EQ(mult[0], 2);
  for (int k = 1; k <= 8; ++k) {
    EXPECT_EQ(mult[k], 2);
    EXPECT_EQ(mult[-k], 2);
  }
}

TEST(Generator, ConstantDampingClosedForm) {
  const double c = 0.3;
  auto g = assemble_generator(DampingProfile::constant(c), 64);
  auto s = wave_spectrum(g);
  EXPECT_LE(s.max_residual, 1e-6);
  for (int k = 0; k <= 64; ++k)
    for (double sg : {1.0, -1.0}) {
      cplx expect = -kI * c + sg * std::sqrt(cplx(double(k) * k - c * c));
      EXPECT_LT(nearest_distance(s.taus, expect), 1e-8) << "k=" << k;
    }
  cplx t1 = -kI * 0.3 + std::sqrt(1 - 0.09);
  EXPECT_LT(nearest_distance(s.taus, t1), 1e-8);
}

TEST(Spectrum, StripSymmetryAndZero) {
  auto a = raised_cosine();
  auto s = wave_spectrum(assemble_generator(a, 32));
  auto st = strip_check(s, a.a_min, a.a_max);
  EXPECT_EQ(st.violations, 0);
  EXPECT_TRUE(st.nonzero_damped);
  EXPECT_LT(symmetry_defect(s), 1e-8);
  EXPECT_LT(nearest_distance(s.taus, 0.0), 1e-8);
  EXPECT_LE(s.max_residual, 1e-6);
  EXPECT_EQ(s.taus.size(), 2u * 65);
}

TEST(Spectrum, GalerkinConvergence) {
  auto a = raised_cosine();
  auto s16 = wave_spectrum(assemble_generator(a, 16), false);
  auto s32 = wave_spectrum(assemble_generator(a, 32), false);
  int checked = 0;
  for (auto t : s16.taus)
    if (std::abs(t) < 8.0) {
      EXPECT_LT(nearest_distance(s32.taus, t), 1e-6) << t;
      ++checked;
    }
  EXPECT_GT(checked, 10);
}

TEST(Evolve, UndampedEnergyConserved) {
  auto g = assemble_generator(DampingProfile::constant(1.0), 16);
  g.blocks[0].toeplitz.setZero();
  g.blocks[0].A.bottomRightCorner(33, 33).setZero();
  auto tr = evolve(g, sobolev_data(g, 1.0, 3), grid(20.0, 40));
  EXPECT_EQ(tr.method, "integrator");  // k = 0 Jordan block
  EXPECT_FALSE(tr.note.empty());
  for (double e : tr.energies) EXPECT_NEAR(e / tr.energies[0], 1.0, 1e-8);
}

TEST(Evolve, SingleModeDecay) {
  auto g = assemble_generator(raised_cosine(), 16);
  auto s = wave_spectrum(g);
  for (std::size_t n : {std::size_t(5), std::size_t(20), std::size_t(40)}) {
    const CMatrix& v = s.block_vectors[0];
    WaveData d{v.col(s.column_of[n]).head(33), -kI * v.col(s.column_of[n]).tail(33)};
    auto tr = evolve(g, d, grid(10.0, 20));
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      EXPECT_NEAR(tr.energies[i] / (tr.energies[0] * std::exp(2 * s.taus[n].imag() * tr.times[i])), 1.0, 1e-6);
  }
}

TEST(Evolve, DissipativeAndMethodsAgree) {
  auto g = assemble_generator(raised_cosine(), 12);
  auto d = sobolev_data(g, 0.0, 9);
  auto e1 = evolve(g, d, grid(15.0, 60), EvolveMethod::eigen);
  auto e2 = evolve(g, d, grid(15.0, 60), EvolveMethod::integrator);
  EXPECT_EQ(e1.method, "eigen");
  for (std::size_t i = 0; i < e1.times.size(); ++i) {
    EXPECT_NEAR(e1.energies[i] / e2.energies[i], 1.0, 1e-6);
    if (i) EXPECT_LE(e1.energies[i], e1.energies[i - 1] * (1 + 1e-6));
  }
  EXPECT_NEAR(e1.energies[0], energy(g, d), 1e-12 * energy(g, d));
}

TEST(DecayFit, ConstantDamping) {
  auto g = assemble_generator(DampingProfile::constant(0.3), 32);
  auto tr = evolve(g, sobolev_data(g, 0.0, 1), grid(60.0, 300));
  auto f = decay_fit(tr, 0.3, 0.3);
  EXPECT_NEAR(f.gamma_fit, 0.3, 0.05 * 0.3);
  EXPECT_DOUBLE_EQ(f.gamma_pred, 0.3);
}

TEST(DecayFit, LebeauRate) {
  auto a = raised_cosine();
  auto g = assemble_generator(a, 32);
  double G = spectral_gap(wave_spectrum(g, false));
  auto tr = evolve(g, sobolev_data(g, 0.0, 2), grid(150.0, 600));
  auto f = decay_fit(tr, G, a.mean);
  EXPECT_NEAR(f.gamma_fit, f.gamma_pred, 0.1 * f.gamma_pred);
}

TEST(DecayFit, VerticalDataLosesDecay) {
  auto g = assemble_generator(strip_gap(2), 16);
  double prev = 1e9;
  for (int m : {2, 6, 16}) {
    WaveData d{CVector::Zero(g.mode_count()), CVector::Zero(g.mode_count())};
    int off = 0;
    for (const auto& b : g.blocks) {
      if (b.k2 == m) d.u(off + 16) = 1.0;  // k = (0, m)
      off += b.size();
    }
    auto f = decay_fit(evolve(g, d, grid(200.0, 400)), 0.0, 0.0);
    EXPECT_LT(f.gamma_fit, prev);
    prev = f.gamma_fit;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(DecayFit, FloorTruncatesWindow) {
  auto g = assemble_generator(DampingProfile::constant(0.5), 8);
  auto tr = evolve(g, sobolev_data(g, 0.0, 4), grid(60.0, 400));
  auto f = decay_fit(tr, 0.5, 0.5);
  EXPECT_LT(f.last, tr.times.size() - 1);
  EXPECT_THROW(decay_fit(evolve(g, sobolev_data(g, 0.0, 4), grid(400.0, 10)), 0.5, 0.5), Error);
}

TEST(Gcc, Circle) {
  auto a = raised_cosine();
  auto r = gcc_scan(a, kTwoPi * 5);
  EXPECT_TRUE(r.gcc);
  EXPECT_NEAR(r.min_average, a.mean, 1e-8);
  EXPECT_NEAR(r.a_minus_estimate, a.mean, 1e-8);
}

TEST(Gcc, StripFailsOnTwoTorus) {
  auto r = gcc_scan(strip_gap(2), 10.0);
  EXPECT_FALSE(r.gcc);
  EXPECT_EQ(r.min_average, 0.0);
  EXPECT_LE(std::fabs(std::cos(r.worst_angle)) * 10.0 / kTwoPi, 0.2);
  EXPECT_GE(r.worst_offset, 0.4);
  EXPECT_LE(r.worst_offset, 0.6);
  // the constructed geodesic itself
  EXPECT_EQ(detail::geodesic_average(strip_gap(2), 0.5, 0.0, 10.0), 0.0);
}

TEST(Gcc, PositiveDampingOnTwoTorus) {
  auto a = DampingProfile::from_observable(Observable::constant(0.5) + Observable::cosine(2, 0, 0.3), 2);
  auto r = gcc_scan(a, 5.0, 16, 50);
  EXPECT_TRUE(r.gcc);
  EXPECT_GE(r.min_average, a.a_min - 1e-12);
}

TEST(KochTataru, ConstantDampingClosedForm) {
  const double c = 0.3, t = 2.0;
  auto g = assemble_generator(DampingProfile::constant(c), 24);
  for (int codim : {1, 11, 31}) {
    auto r = koch_tataru_check(g, t, codim);
    // modes left after removing the codim lowest: |k| >= (codim + 1) / 2
    int kmin = (codim + 1) / 2;
    double expect = 0.0;
    for (int k = kmin; k <= 24; ++k) expect = std::max(expect, mode_norm_closed_form(k, c, t));
    EXPECT_NEAR(r.restricted_norm, expect, 1e-9) << "codim=" << codim;
    EXPECT_NEAR(r.bound, std::exp(-c * t), 1e-10);
  }
  // high frequencies approach e^{-ct}
  EXPECT_NEAR(mode_norm_closed_form(4000, c, t), std::exp(-c * t), 1e-3);
}

TEST(KochTataru, NestedAndGccFailure) {
  auto g = assemble_generator(strip_gap(2), 12);
  double prev = 1e9;
  for (int codim : {1, 10, 40, 100}) {
    auto r = koch_tataru_check(g, 3.0, codim, 16);
    EXPECT_LE(r.restricted_norm, prev + 1e-12);
    prev = r.restricted_norm;
    EXPECT_EQ(r.bound, 1.0);
    EXPECT_GE(r.restricted_norm, 0.9);
  }
  EXPECT_THROW(koch_tataru_check(g, 1.0, 0), Error);
}

TEST(Microlocal, PureAndConstantModes) {
  auto g0 = assemble_generator(DampingProfile::constant(1.0), 32);
  g0.blocks[0].toeplitz.setZero();
  g0.blocks[0].A.bottomRightCorner(65, 65).setZero();
  auto s0 = wave_spectrum(g0);
  auto gc = assemble_generator(DampingProfile::constant(0.3), 32);
  auto sc = wave_spectrum(gc);
  for (std::size_t n = 0; n < s0.taus.size(); ++n)
    if (std::fabs(s0.taus[n].real()) >= 5) EXPECT_LE(microlocal_check(g0, s0, n, 0.01), 1e-28);
  for (std::size_t n = 0; n < sc.taus.size(); ++n)
    if (std::fabs(std::fabs(sc.taus[n].real()) - std::sqrt(400 - 0.09)) < 1e-6)
      EXPECT_LT(microlocal_check(gc, sc, n, 0.01), 1e-10);
  for (std::size_t n = 0; n < sc.taus.size(); ++n)
    if (std::fabs(sc.taus[n].real()) < 5) EXPECT_THROW(microlocal_check(gc, sc, n, 0.1), Error);
}

TEST(Microlocal, RaisedCosineWindow) {
  auto g = assemble_generator(raised_cosine(), 64);
  auto s = wave_spectrum(g);
  double C = 0;
  int n_modes = 0;
  for (std::size_t n = 0; n < s.taus.size(); ++n) {
    double re = std::fabs(s.taus[n].real());
    if (re < 30 || re > 40) continue;
    C = std::max(C, microlocal_check(g, s, n, 0.2) * re);
    ++n_modes;
  }
  EXPECT_GT(n_modes, 20);
  EXPECT_LE(C, 5.0);
}

TEST(Rescale, Examples) {
  EXPECT_EQ(rescale(cplx(100.0), 0.01), cplx(0.5));
  const double c = 0.3;
  for (double h : {0.01, 0.005, 0.001}) {
    cplx z = rescale(cplx(1.0 / h, -c), h);
    EXPECT_LE(std::fabs(z.imag() / h + c), 2 * c * c * h);
  }
  EXPECT_THROW(rescale(cplx(-1.0, 0.0), 0.1), Error);
  // wave band [a_min, a_max] of -Im tau maps to q-band [-a_max, -a_min] of Im z / hbar
  auto a = raised_cosine();
  for (double g : {a.a_min, a.a_max}) {
    double h = 1e-4;
    EXPECT_NEAR(rescale(cplx(1.0 / h, -g), h).imag() / h, -g, 1e-3);
  }
}

TEST(WeylLaw, CircleDampedAndUndamped) {
  auto g0 = assemble_generator(DampingProfile::constant(1.0), 64);
  g0.blocks[0].toeplitz.setZero();
  g0.blocks[0].A.bottomRightCorner(129, 129).setZero();
  auto r0 = wave_record(wave_spectrum(g0, false));
  auto r3 = wave_record(wave_spectrum(assemble_generator(DampingProfile::constant(0.3), 64), false));
  for (double R : {10.0, 25.0, 40.0}) {
    auto w0 = spectra::weyl_count(r0, 1, 0.0, R);
    auto w3 = spectra::weyl_count(r3, 1, 0.0, R);
    EXPECT_LE(std::fabs(w0.count - w0.prediction), 3);
    EXPECT_LE(std::abs(w3.count - w0.count), 3);
  }
}

TEST(WeylLaw, TwoTorusLatticeOracle) {
  auto g = assemble_generator(DampingProfile::constant(0.3, 2), 48);
  auto r = wave_record(wave_spectrum(g, false));
  const double R = 40;
  auto w = spectra::weyl_count(r, 2, R, R + 1);
  int lattice = 0;  // |k| in [R, R+1) for k in Z^2
  for (int a = -48; a <= 48; ++a)
    for (int b = -48; b <= 48; ++b) {
      double k = std::sqrt(double(a * a + b * b));
      if (std::sqrt(k * k - 0.09) >= R && std::sqrt(k * k - 0.09) < R + 1) ++lattice;
    }
  EXPECT_EQ(w.count, lattice);
  EXPECT_LE(std::fabs(w.count - w.prediction), 0.25 * w.prediction);
}

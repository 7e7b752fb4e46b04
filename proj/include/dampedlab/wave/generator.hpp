#pragma once

#include "dampedlab/linalg.hpp"
#include "dampedlab/spectra/spectrum.hpp"
#include "dampedlab/wave/profile.hpp"

namespace dampedlab::wave {

/// Galerkin block for one vertical frequency k2 (k2 = 0 on the circle).
/// State ordering: (u_{-K..K}, v_{-K..K}) with v = i du/dt.
struct Block {
  int k2 = 0;
  std::vector<int> k1;
  RVector ksq;     // k1^2 + k2^2
  CMatrix toeplitz;  // [a_{k1_i - k1_j}]
  CMatrix A;         // [[0, I], [diag(ksq), -2i T]]
  int size() const { return int(k1.size()); }
};

struct WaveGenerator {
  DampingProfile a;
  int K = 0;
  int dim = 1;
  std::vector<Block> blocks;
  bool underresolved = false;  // damping bandwidth exceeds 2K
  int mode_count() const {
    int m = 0;
    for (const auto& b : blocks) m += b.size();
    return m;
  }
};

inline WaveGenerator assemble_generator(const DampingProfile& a, int K) {
  if (K < 4) throw Error("assemble_generator: K must be >= 4");
  WaveGenerator g;
  g.a = a;
  g.K = K;
  g.dim = a.dim;
  g.underresolved = a.bandwidth() > 2 * K;
  const int m = 2 * K + 1;
  CMatrix T(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) T(i, j) = a.coeff(i - j);
  std::vector<int> k2s{0};
  if (g.dim == 2) {
    k2s.clear();
    for (int k = -K; k <= K; ++k) k2s.push_back(k);
  }
  for (int k2 : k2s) {
    Block b;
    b.k2 = k2;
    b.ksq.resize(m);
    for (int i = 0; i < m; ++i) {
      b.k1.push_back(i - K);
      b.ksq(i) = double(i - K) * (i - K) + double(k2) * k2;
    }
    b.toeplitz = T;
    b.A = CMatrix::Zero(2 * m, 2 * m);
    b.A.topRightCorner(m, m).setIdentity();
    b.A.bottomLeftCorner(m, m) = b.ksq.cast<cplx>().asDiagonal();
    b.A.bottomRightCorner(m, m) = -2.0 * kI * T;
    g.blocks.push_back(std::move(b));
  }
  return g;
}

struct WaveSpectrum {
  int K = 0;
  int dim = 1;
  std::vector<cplx> taus;
  std::vector<int> block_of;
  std::vector<int> column_of;
  std::vector<CMatrix> block_vectors;  // empty unless modes were requested
  double max_residual = 0.0;           // max pencil residual / (1 + |tau|^2)

  /// u-component of mode n, unit 2-norm.
  CVector mode(std::size_t n) const {
    if (block_vectors.empty()) throw Error("WaveSpectrum: modes were not stored");
    const CMatrix& v = block_vectors[std::size_t(block_of[n])];
    CVector u = v.col(column_of[n]).head(v.rows() / 2);
    double nu = u.norm();
    return nu > 0 ? CVector(u / nu) : u;
  }
};

inline WaveSpectrum wave_spectrum(const WaveGenerator& g, bool keep_modes = true) {
  WaveSpectrum s;
  s.K = g.K;
  s.dim = g.dim;
  for (std::size_t b = 0; b < g.blocks.size(); ++b) {
    const Block& blk = g.blocks[b];
    auto e = linalg::eig(blk.A, true);
    const int m = blk.size();
    for (int c = 0; c < 2 * m; ++c) {
      cplx tau = e.values(c);
      CVector u = e.vectors.col(c).head(m);
      double nu = u.norm();
      if (nu > 0) {
        u /= nu;
        CVector r = blk.ksq.cast<cplx>().asDiagonal() * u - tau * tau * u - 2.0 * kI * tau * (blk.toeplitz * u);
        s.max_residual = std::max(s.max_residual, r.norm() / (1.0 + std::norm(tau)));
      }
      s.taus.push_back(tau);
      s.block_of.push_back(int(b));
      s.column_of.push_back(c);
    }
    if (keep_modes) s.block_vectors.push_back(std::move(e.vectors));
  }
  return s;
}

inline spectra::SpectrumRecord wave_record(const WaveSpectrum& s) {
  return spectra::wave_record(s.taus, s.max_residual,
                              "wave dim=" + std::to_string(s.dim) + " K=" + std::to_string(s.K));
}

/// Distance from tau to the nearest entry of the list.
inline double nearest_distance(const std::vector<cplx>& taus, cplx tau) {
  double d = std::numeric_limits<double>::infinity();
  for (const cplx& t : taus) d = std::min(d, std::abs(t - tau));
  return d;
}

/// max over tau of the distance from -conj(tau) to the spectrum.
inline double symmetry_defect(const WaveSpectrum& s) {
  double worst = 0.0;
  for (const cplx& t : s.taus) worst = std::max(worst, nearest_distance(s.taus, -std::conj(t)));
  return worst;
}

struct StripReport {
  int violations = 0;
  double min_rate = 0.0;  // over Re tau != 0
  double max_rate = 0.0;
  bool nonzero_damped = true;  // every tau != 0 has Im tau < 0
};

inline StripReport strip_check(const WaveSpectrum& s, double a_min, double a_max, double tol = 1e-6,
                               double zero_tol = 1e-8) {
  StripReport r;
  r.min_rate = std::numeric_limits<double>::infinity();
  r.max_rate = -r.min_rate;
  for (const cplx& t : s.taus) {
    if (std::abs(t) > zero_tol && !(t.imag() < 0)) r.nonzero_damped = false;
    if (std::fabs(t.real()) <= zero_tol) continue;
    double g = -t.imag();
    r.min_rate = std::min(r.min_rate, g);
    r.max_rate = std::max(r.max_rate, g);
    if (g < a_min - tol || g > a_max + tol) ++r.violations;
  }
  return r;
}

/// Fraction of the squared Fourier mass of mode n with |k| outside [|Re tau|(1-delta), |Re tau|(1+delta)].
inline double microlocal_check(const WaveGenerator& g, const WaveSpectrum& s, std::size_t n, double delta) {
  const double re = std::fabs(s.taus.at(n).real());
  if (re < 5.0) throw Error("microlocal_check: |Re tau| must be >= 5");
  const Block& blk = g.blocks[std::size_t(s.block_of[n])];
  CVector u = s.mode(n);
  double outside = 0.0;
  for (int i = 0; i < blk.size(); ++i) {
    double k = std::sqrt(blk.ksq(i));
    if (k < re * (1 - delta) || k > re * (1 + delta)) outside += std::norm(u(i));
  }
  return outside;
}

/// z = (hbar tau)^2 / 2.
inline cplx rescale(cplx tau, double hbar) {
  if (!(tau.real() > 0)) throw Error("rescale: Re tau must be positive");
  cplx h = hbar * tau;
  return 0.5 * h * h;
}

} // namespace dampedlab::wave

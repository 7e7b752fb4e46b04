#pragma once

#include "dampedlab/classical.hpp"
#include "dampedlab/linalg.hpp"

#include <unsupported/Eigen/FFT>

namespace dampedlab::qtorus {

using classical::LinearMap;
using classical::Observable;
using classical::TorusMap;
using classical::TorusPoint;

struct HilbertGrid {
  int N = 0;

  explicit HilbertGrid(int n) : N(n) {
    if (n < 1) throw Error("HilbertGrid: N must be positive");
  }
  double hbar() const { return 1.0 / (kTwoPi * N); }
};

enum class Scheme { weyl, anti_wick };

/// Elementary factors of SL(2,Z): shears [[1,b],[0,1]] and [[1,0],[c,1]], the rotation
/// S = [[0,-1],[1,0]], and -I.
struct Generator {
  enum Kind { upper, lower, rotation, minus_identity } kind;
  long value = 0;

  LinearMap matrix() const {
    switch (kind) {
      case upper: return {1, value, 0, 1};
      case lower: return {1, 0, value, 1};
      case rotation: return {0, -1, 1, 0};
      default: return {-1, 0, 0, -1};
    }
  }
};

/// M = G_1 G_2 ... G_m by Euclid on the first column.
inline std::vector<Generator> decompose(LinearMap m) {
  if (m.det() != 1) throw Error("decompose: determinant must be 1");
  std::vector<Generator> out;
  int guard = 0;
  while (m.c != 0) {
    if (++guard > 200) throw Error("decompose: no termination");
    long k = static_cast<long>(std::floor(double(m.a) / double(m.c)));
    // m = R_k * S * m'' with m'' = S^{-1} R_{-k} m
    long a1 = m.a - k * m.c, b1 = m.b - k * m.d;
    if (k != 0) out.push_back({Generator::upper, k});
    out.push_back({Generator::rotation, 0});
    m = LinearMap{m.c, m.d, -a1, -b1};
  }
  if (m.a == -1) out.push_back({Generator::minus_identity, 0});
  long shear = m.a * m.b;
  if (shear != 0) out.push_back({Generator::upper, shear});
  return out;
}

namespace detail {

/// y = F x with F_{jk} = exp(2 pi i j k / N)/sqrt(N), or its adjoint.
inline void dft_columns(CMatrix& x, bool adjoint) {
  const Eigen::Index n = x.rows();
  Eigen::FFT<double> fft;
  CVector in(n), out(n);
  const double s = std::sqrt(double(n));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    in = x.col(c);
    if (adjoint) {
      fft.fwd(out, in);
      x.col(c) = out / s;
    } else {
      fft.inv(out, in);
      x.col(c) = out * s;
    }
  }
}

/// exp(i pi v j^2 / N) with the exponent reduced mod 2N in integers.
inline cplx shear_phase(long v, long j, int N) {
  long r = ((v % (2L * N)) * ((j * j) % (2L * N))) % (2L * N);
  return std::polar(1.0, kPi * double(r) / N);
}

/// Left-multiply x by the quantization of one generator, or by its adjoint.
inline void apply_generator(const Generator& g, CMatrix& x, bool adjoint = false) {
  const int N = int(x.rows());
  const long sgn = adjoint ? -1 : 1;
  switch (g.kind) {
    case Generator::lower:
      for (int j = 0; j < N; ++j) x.row(j) *= shear_phase(sgn * g.value, j, N);
      break;
    case Generator::upper:
      dft_columns(x, true);
      for (int k = 0; k < N; ++k) x.row(k) *= shear_phase(-sgn * g.value, k, N);
      dft_columns(x, false);
      break;
    case Generator::rotation:
      dft_columns(x, adjoint);
      break;
    case Generator::minus_identity: {
      CMatrix y = x;
      for (int j = 0; j < N; ++j) x.row(j) = y.row((N - j) % N);
      break;
    }
  }
}

} // namespace detail

/// Quantization needs N even: the shear phases exp(i pi c j^2/N) are N-periodic in j only then.
inline void check_parity(const LinearMap&, const HilbertGrid& g) {
  if (g.N % 2 != 0)
    throw Error("quantize_cat: N = " + std::to_string(g.N) + " violates the parity condition; admissible N residues: N = 0 (mod 2)");
}

inline CMatrix quantize_cat(const LinearMap& m, const HilbertGrid& g) {
  m.validate();
  check_parity(m, g);
  auto gens = decompose(m);
  CMatrix u = CMatrix::Identity(g.N, g.N);
  for (auto it = gens.rbegin(); it != gens.rend(); ++it) detail::apply_generator(*it, u);
  return u;
}

/// U or U^* applied to the columns of x through the generator factorization, O(N log N) per column.
struct CatOperator {
  HilbertGrid grid{2};
  std::vector<Generator> gens;

  CatOperator(const LinearMap& m, const HilbertGrid& g) : grid(g) {
    m.validate();
    check_parity(m, g);
    gens = decompose(m);
  }
  void apply(CMatrix& x, int power = 1, bool adjoint = false) const {
    for (int p = 0; p < power; ++p) {
      if (adjoint)
        for (const auto& gen : gens) detail::apply_generator(gen, x, true);
      else
        for (auto it = gens.rbegin(); it != gens.rend(); ++it) detail::apply_generator(*it, x);
    }
  }
};

inline CMatrix quantize_cat(const TorusMap& map, const HilbertGrid& g) {
  if (!map.is_linear()) throw Error("quantize_cat: only linear maps are quantized");
  return quantize_cat(map.linear_part(), g);
}

/// Op(e_k): |j> -> exp(2 pi i k1 (j - k2/2)/N) |j - k2>.
inline double anti_wick_factor(int k1, int k2, int N, double squeeze = 1.0) {
  return std::exp(-kPi * (squeeze * double(k1) * k1 + double(k2) * k2 / squeeze) / (2.0 * N));
}

inline CMatrix quantize_observable(const Observable& q, const HilbertGrid& g, Scheme scheme = Scheme::weyl,
                                   double squeeze = 1.0) {
  const int N = g.N;
  CMatrix op = CMatrix::Zero(N, N);
  for (const auto& [k, c] : q.coefficients()) {
    auto [k1, k2] = k;
    cplx amp = c;
    if (scheme == Scheme::anti_wick) amp *= anti_wick_factor(k1, k2, N, squeeze);
    int shift = ((k2 % N) + N) % N;
    for (int j = 0; j < N; ++j) {
      double ph = kTwoPi * double(k1) * (double(j) - 0.5 * k2) / N;
      op((j - shift + N) % N, j) += amp * std::polar(1.0, ph);
    }
  }
  return op;
}

inline CMatrix fourier_mode(int k1, int k2, const HilbertGrid& g) {
  CMatrix op = CMatrix::Zero(g.N, g.N);
  int shift = ((k2 % g.N) + g.N) % g.N;
  for (int j = 0; j < g.N; ++j)
    op((j - shift + g.N) % g.N, j) = std::polar(1.0, kTwoPi * double(k1) * (double(j) - 0.5 * k2) / g.N);
  return op;
}

struct EgorovReport {
  double max_defect = 0.0;
  std::vector<std::tuple<int, int, double, cplx>> entries;  // k1, k2, defect, phase
};

/// max over |k_i| <= kmax of min_phase || U* Op(e_k) U - phase Op(e_{kM}) ||.
inline EgorovReport egorov_defect(const CMatrix& u, const LinearMap& m, const HilbertGrid& g, int kmax) {
  EgorovReport r;
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      CMatrix lhs = u.adjoint() * fourier_mode(k1, k2, g) * u;
      int l1 = int(k1 * m.a + k2 * m.c), l2 = int(k1 * m.b + k2 * m.d);
      CMatrix rhs = fourier_mode(l1, l2, g);
      cplx phase = (rhs.adjoint() * lhs).trace() / double(g.N);
      double d = linalg::spectral_norm(lhs - phase * rhs);
      r.entries.emplace_back(k1, k2, d, phase);
      r.max_defect = std::max(r.max_defect, d);
    }
  return r;
}

/// Smallest n <= n_max with U^n proportional to the identity, or 0.
inline int quantum_period(const CMatrix& u, int n_max, double tol = 1e-8) {
  CMatrix p = u;
  const double N = double(u.rows());
  for (int n = 1; n <= n_max; ++n) {
    cplx s = p.trace() / N;
    if (std::abs(std::abs(s) - 1.0) < tol && (p - s * CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() < tol)
      return n;
    p = u * p;
  }
  return 0;
}

} // namespace dampedlab::qtorus

#pragma once

#include "dampedlab/qtorus/propagator.hpp"

namespace dampedlab::dispersion {

using classical::LinearMap;
using classical::Observable;
using classical::TorusMap;
using classical::TorusPoint;
using qtorus::HilbertGrid;

/// Smoothed indicator of [a/m, (a+1)/m) on the circle: Fourier coefficients for |k| <= K.
/// The last interval takes the complement so that the m profiles sum to 1 coefficientwise.
inline std::vector<std::vector<cplx>> smoothed_indicators(int m, double sigma, int K) {
  std::vector<std::vector<cplx>> c(std::size_t(m), std::vector<cplx>(std::size_t(2 * K + 1), 0.0));
  for (int a = 0; a < m; ++a) {
    if (a == m - 1) {
      for (int k = -K; k <= K; ++k) {
        cplx s = k == 0 ? cplx(1.0) : cplx(0.0);
        for (int b = 0; b < m - 1; ++b) s -= c[std::size_t(b)][std::size_t(k + K)];
        c[std::size_t(a)][std::size_t(k + K)] = s;
      }
      break;
    }
    for (int k = -K; k <= K; ++k) {
      cplx v;
      if (k == 0) {
        v = 1.0 / m;
      } else {
        v = (std::exp(-kI * kTwoPi * double(k) * double(a) / double(m)) -
             std::exp(-kI * kTwoPi * double(k) * double(a + 1) / double(m))) /
            (kI * kTwoPi * double(k));
      }
      c[std::size_t(a)][std::size_t(k + K)] = v * std::exp(-2.0 * kPi * kPi * sigma * sigma * double(k) * k);
    }
  }
  return c;
}

/// Anti-Wick quantized partition of unity on an m x m grid of square cells, J = m^2.
/// Cell j = a*m + b covers x in [a/m, (a+1)/m), p in [b/m, (b+1)/m).
struct QuantumPartition {
  HilbertGrid grid{2};
  int m = 1;
  int J = 1;
  double delta = 1.0;  // cell side
  double sigma = 0.0;  // symbol smoothing width
  int K = 0;           // Fourier truncation
  std::vector<std::vector<cplx>> cx, cp;  // indicator coefficients per interval

  // Banded representation: (Pi psi)[j - k2] += band[b][k2 + K] * diag[a][(2j - k2) mod 2N] * psi[j]
  std::vector<std::vector<cplx>> band;  // per p-interval
  std::vector<std::vector<cplx>> diag;  // per x-interval, period 2N stored twice

  int cell_x(int j) const { return j / m; }
  int cell_p(int j) const { return j % m; }

  /// Symbol pi_j as an Observable (for checks at small size).
  Observable symbol(int j) const {
    std::map<classical::Frequency, cplx> co;
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = -K; k2 <= K; ++k2) {
        cplx v = cx[std::size_t(cell_x(j))][std::size_t(k1 + K)] * cp[std::size_t(cell_p(j))][std::size_t(k2 + K)];
        if (v != 0.0) co[{k1, k2}] = v;
      }
    return Observable::from_coefficients(co, 1e-300);
  }

  double symbol_value(int j, double x, double p) const {
    cplx sx = 0, sp = 0;
    for (int k = -K; k <= K; ++k) {
      sx += cx[std::size_t(cell_x(j))][std::size_t(k + K)] * std::exp(kI * kTwoPi * double(k) * x);
      sp += cp[std::size_t(cell_p(j))][std::size_t(k + K)] * std::exp(kI * kTwoPi * double(k) * p);
    }
    return (sx * sp).real();
  }

  void apply(int j, const CVector& psi, CVector& out) const {
    const int N = grid.N;
    out.setZero(N);
    const auto& bd = band[std::size_t(cell_p(j))];
    const auto& dg = diag[std::size_t(cell_x(j))];
    const cplx* d = dg.data();  // length 4N: two periods
    const cplx* x = psi.data();
    cplx* y = out.data();
    for (int k2 = -K; k2 <= K; ++k2) {
      const cplx w = bd[std::size_t(k2 + K)];
      if (w == 0.0) continue;
      const int s = ((k2 % N) + N) % N;           // out index i - s
      const int h0 = ((-k2) % (2 * N) + 2 * N) % (2 * N);  // h = h0 + 2i, read from the doubled table
      // i in [s, N): out i - s; i in [0, s): out i - s + N
      // plain real arithmetic; operator* on std::complex goes through __muldc3
      auto madd = [&](int i, int o) {
        const double dr = d[h0 + 2 * i].real(), di = d[h0 + 2 * i].imag();
        const double tr = w.real() * dr - w.imag() * di, ti = w.real() * di + w.imag() * dr;
        const double xr = x[i].real(), xi = x[i].imag();
        y[o] += cplx(tr * xr - ti * xi, tr * xi + ti * xr);
      };
      for (int i = s; i < N; ++i) madd(i, i - s);
      for (int i = 0; i < s; ++i) madd(i, i - s + N);
    }
  }

  CVector apply(int j, const CVector& psi) const {
    CVector out;
    apply(j, psi, out);
    return out;
  }

  CMatrix dense(int j) const {
    CMatrix d(grid.N, grid.N);
    CVector e = CVector::Zero(grid.N), col;
    for (int i = 0; i < grid.N; ++i) {
      e.setZero();
      e(i) = 1.0;
      apply(j, e, col);
      d.col(i) = col;
    }
    return d;
  }
};

/// J must be a perfect square m^2; the cell side 1/m must not exceed delta.
/// sigma defaults to 1/(8m); coefficients are kept while the combined decay exceeds 1e-17.
inline QuantumPartition build_partition(const HilbertGrid& g, int J, double delta, double sigma = -1.0) {
  const int m = int(std::lround(std::sqrt(double(J))));
  if (J < 1 || m * m != J) throw Error("build_partition: J = " + std::to_string(J) + " is not a perfect square");
  if (1.0 / m > delta + 1e-15)
    throw Error("build_partition: cells of side 1/" + std::to_string(m) + " exceed the diameter bound " +
                std::to_string(delta));
  QuantumPartition P;
  P.grid = g;
  P.m = m;
  P.J = J;
  P.delta = 1.0 / m;
  P.sigma = sigma < 0 ? 1.0 / (8.0 * m) : sigma;
  const int N = g.N;
  const double decay = 2 * kPi * kPi * P.sigma * P.sigma + kPi / (2.0 * N);
  P.K = m == 1 ? 0 : int(std::ceil(std::sqrt(std::log(1e17) / decay)));
  P.cx = smoothed_indicators(m, P.sigma, P.K);
  P.cp = P.cx;
  P.band.resize(std::size_t(m));
  P.diag.resize(std::size_t(m));
  for (int b = 0; b < m; ++b) {
    P.band[std::size_t(b)].resize(std::size_t(2 * P.K + 1));
    for (int k2 = -P.K; k2 <= P.K; ++k2)
      P.band[std::size_t(b)][std::size_t(k2 + P.K)] =
          P.cp[std::size_t(b)][std::size_t(k2 + P.K)] * std::exp(-kPi * double(k2) * k2 / (2.0 * N));
  }
  for (int a = 0; a < m; ++a) {
    auto& dg = P.diag[std::size_t(a)];
    dg.assign(std::size_t(2 * N), 0.0);
    for (int h = 0; h < 2 * N; ++h) {
      cplx s = 0;
      for (int k1 = -P.K; k1 <= P.K; ++k1) {
        cplx c = P.cx[std::size_t(a)][std::size_t(k1 + P.K)] * std::exp(-kPi * double(k1) * k1 / (2.0 * N));
        long r = (long(k1) * h) % (2L * N);
        s += c * std::polar(1.0, kPi * double(r) / N);
      }
      dg[std::size_t(h)] = s;
    }
    dg.resize(std::size_t(4 * N));
    std::copy_n(dg.begin(), 2 * N, dg.begin() + 2 * N);
  }
  return P;
}

} // namespace dampedlab::dispersion

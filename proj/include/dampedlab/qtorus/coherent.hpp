#pragma once

#include "dampedlab/qtorus/quantize.hpp"

namespace dampedlab::qtorus {

struct CoherentState {
  TorusPoint center;
  CVector vector;
  double squeeze = 1.0;
};

/// Gaussian wavepacket exp(-pi N (x-x0)^2/s + 2 pi i N p0 x), periodised over x -> x + m and
/// sampled at x_j = j/N, then normalised. Position variance s/(4 pi N).
inline CoherentState coherent_state(const TorusPoint& center, const HilbertGrid& g, double squeeze = 1.0) {
  if (squeeze <= 0) throw Error("coherent_state: squeeze must be positive");
  const int N = g.N;
  CoherentState cs{center, CVector::Zero(N), squeeze};
  const double width = std::sqrt(squeeze / (kPi * N));
  const int images = 1 + int(std::ceil(8.0 * width));
  for (int j = 0; j < N; ++j) {
    cplx acc = 0.0;
    double xj = double(j) / N;
    for (int m = -images; m <= images; ++m) {
      double d = xj + m - center.x;
      double env = -kPi * N * d * d / squeeze;
      if (env < -745.0) continue;
      double phase = kTwoPi * std::fmod(double(N) * center.p * (xj + m), 1.0);
      acc += std::exp(env) * std::polar(1.0, phase);
    }
    cs.vector(j) = acc;
  }
  double nrm = cs.vector.norm();
  if (!(nrm > 0)) throw Error("coherent_state: vanishing amplitude");
  cs.vector /= nrm;
  return cs;
}

/// N |<e_rho, psi>|^2; integrates to |psi|^2 over the torus.
inline double husimi(const CVector& psi, const TorusPoint& rho, const HilbertGrid& g, double squeeze = 1.0) {
  return double(g.N) * std::norm(coherent_state(rho, g, squeeze).vector.dot(psi));
}

/// Husimi mass of psi inside the torus ball B(center, radius), by an M x M midpoint rule.
inline double husimi_mass_in_ball(const CVector& psi, const TorusPoint& center, double radius, const HilbertGrid& g,
                                  int M, double squeeze = 1.0) {
  double mass = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      TorusPoint r((i + 0.5) / M, (j + 0.5) / M);
      if (classical::torus_dist(r, center) <= radius) mass += husimi(psi, r, g, squeeze);
    }
  return mass / (double(M) * M);
}

/// Anti-Wick operator by explicit quadrature N * sum q(rho)|e_rho><e_rho| / M^2 on an M x M grid.
inline CMatrix anti_wick_quadrature(const Observable& q, const HilbertGrid& g, int M = 0, double squeeze = 1.0) {
  if (M <= 0) M = 4 * g.N;
  CMatrix op = CMatrix::Zero(g.N, g.N);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      TorusPoint r(double(i) / M, double(j) / M);
      CVector e = coherent_state(r, g, squeeze).vector;
      op.noalias() += q(r.x, r.p) * (e * e.adjoint());
    }
  return op * (double(g.N) / (double(M) * M));
}

} // namespace dampedlab::qtorus

#pragma once

#include "dampedlab/qtorus/coherent.hpp"

#include <cstring>
#include <fstream>

namespace dampedlab::qtorus {

struct DampedPropagator {
  HilbertGrid grid{2};
  TorusMap map = TorusMap::linear(2, 1, 1, 1);
  Observable q;
  CMatrix U;
  CMatrix B;
  CMatrix V;
  bool diagonal_damping = false;
};

/// B = exp(Op_W(q)); diagonal when q depends on x only.
inline CMatrix damping_factor(const Observable& q, const HilbertGrid& g, bool* diagonal = nullptr) {
  if (!q.depends_on_momentum()) {
    if (diagonal) *diagonal = true;
    CMatrix b = CMatrix::Zero(g.N, g.N);
    for (int j = 0; j < g.N; ++j) b(j, j) = std::exp(q(double(j) / g.N, 0.0));
    return b;
  }
  if (diagonal) *diagonal = false;
  return linalg::expm_hermitian(quantize_observable(q, g, Scheme::weyl));
}

inline DampedPropagator damped_propagator(const TorusMap& map, const Observable& q, const HilbertGrid& g) {
  DampedPropagator dp{g, map, q, quantize_cat(map, g), CMatrix(), CMatrix(), false};
  dp.B = damping_factor(q, g, &dp.diagonal_damping);
  if (dp.diagonal_damping)
    dp.V = dp.U * dp.B.diagonal().asDiagonal();
  else
    dp.V = dp.U * dp.B;
  return dp;
}

/// V^n psi without forming V^n.
inline CVector apply_power(const CMatrix& v, CVector psi, int n) {
  for (int k = 0; k < n; ++k) psi = v * psi;
  return psi;
}

struct EgorovDamping {
  double measured = 0.0;
  double predicted = 0.0;
  double ratio() const { return measured / predicted; }
};

/// ||V^n e_rho|| against exp(sum_{k<n} q(Phi^k rho)).
inline EgorovDamping egorov_damping_check(const DampedPropagator& dp, const TorusPoint& rho, int n) {
  if (n < 1) throw Error("egorov_damping_check: n must be >= 1");
  CVector e = coherent_state(rho, dp.grid).vector;
  EgorovDamping r;
  r.measured = apply_power(dp.V, e, n).norm();
  r.predicted = std::exp(n * classical::birkhoff_average(dp.map, dp.q, rho, n));
  return r;
}

/// B_n = (U^{-(n-1)} B U^{n-1}) ... (U^{-1} B U) B, so that V^n = U^n B_n.
inline CMatrix accumulated_damping(const DampedPropagator& dp, int n) {
  CMatrix acc = CMatrix::Identity(dp.grid.N, dp.grid.N);
  CMatrix Uk = CMatrix::Identity(dp.grid.N, dp.grid.N);
  for (int k = 0; k < n; ++k) {
    acc = Uk.adjoint() * dp.B * Uk * acc;
    Uk = dp.U * Uk;
  }
  return acc;
}

inline constexpr std::uint32_t kMatrixMagic = 0x314d4c44;  // "DLM1" little-endian

/// 8-byte header (magic, N) followed by N*N row-major complex128 values.
inline void write_matrix(const std::string& path, const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error("write_matrix: square matrices only");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("write_matrix: cannot open " + path);
  std::uint32_t hdr[2] = {kMatrixMagic, std::uint32_t(m.rows())};
  f.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  f.write(reinterpret_cast<const char*>(rm.data()), std::streamsize(sizeof(cplx) * rm.size()));
  if (!f) throw Error("write_matrix: write failed for " + path);
}

inline CMatrix read_matrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("read_matrix: cannot open " + path);
  std::uint32_t hdr[2];
  f.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!f || hdr[0] != kMatrixMagic) throw Error("read_matrix: bad header in " + path);
  Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(hdr[1], hdr[1]);
  f.read(reinterpret_cast<char*>(rm.data()), std::streamsize(sizeof(cplx) * rm.size()));
  if (!f) throw Error("read_matrix: truncated payload in " + path);
  return rm;
}

} // namespace dampedlab::qtorus

#pragma once

#include "dampedlab/dispersion/paths.hpp"

namespace dampedlab::dispersion {

struct EhrenfestTime {
  int N = 0;
  double eps = 0.0;
  double lambda_max = 0.0;  // maximal expansion rate
  int T = 0;
};

/// Largest even integer <= (1 - 2 eps) log(2 pi N) / lambda_max.
inline EhrenfestTime ehrenfest_time(int N, double eps, double lambda_max) {
  if (N < 2 || !(lambda_max > 0) || eps < 0 || eps >= 0.5) throw Error("ehrenfest_time: invalid arguments");
  EhrenfestTime e{N, eps, lambda_max, 0};
  int t = int(std::floor((1 - 2 * eps) * std::log(kTwoPi * N) / lambda_max));
  e.T = t - (t % 2);
  return e;
}

/// Polar split of the symmetrized damped propagator B_s = U^{-T/2} V^T U^{-T/2} = W A.
/// With B_s = X diag(s) Y^*: W = X Y^*, A = Y diag(s) Y^*, Pi_+ = Y_+ Y_+^* over s >= e^{alpha T}.
struct ProjectorSplit {
  int N = 0;
  int T = 0;
  double alpha_level = 0.0;
  CMatrix B_s;
  CMatrix X, Y;
  RVector sigma;  // descending
  int rank_plus = 0;

  CMatrix W() const { return X * Y.adjoint(); }
  CMatrix A() const { return Y * sigma.cast<cplx>().asDiagonal() * Y.adjoint(); }
  CMatrix Pi_plus() const {
    auto Yp = Y.leftCols(rank_plus);
    return Yp * Yp.adjoint();
  }
  CMatrix Pi_minus() const {
    auto Ym = Y.rightCols(N - rank_plus);
    return Ym * Ym.adjoint();
  }
  /// |A Pi_-| = largest singular value below the level.
  double norm_A_minus() const { return rank_plus < N ? sigma(rank_plus) : 0.0; }
  double norm_A_plus() const { return rank_plus > 0 ? sigma(0) : 0.0; }
};

/// B_s built by column operations: U^{-T/2}, then V T times, then U^{-T/2}.
inline CMatrix symmetrized_propagator(const DampedPropagator& dp, int T) {
  if (T < 0 || T % 2) throw Error("symmetrized_propagator: T must be a nonnegative even integer");
  PropagatorApply V(dp);
  CMatrix x = CMatrix::Identity(dp.grid.N, dp.grid.N);
  V.cat().apply(x, T / 2, true);
  for (int t = 0; t < T; ++t) V(x);
  V.cat().apply(x, T / 2, true);
  return x;
}

inline int rank_above(const RVector& sigma, double level) {
  int r = 0;
  while (r < sigma.size() && sigma(r) >= level) ++r;
  return r;
}

inline ProjectorSplit projector_split(const DampedPropagator& dp, int T, double alpha_level) {
  if (T < 0 || T % 2) throw Error("projector_split: T must be a nonnegative even integer");
  const double lmax = std::log(dp.map.linear_part().lambda());
  const int cap = 2 * ehrenfest_time(dp.grid.N, 0.0, lmax).T;
  if (T > cap)
    throw Error("projector_split: T = " + std::to_string(T) + " exceeds twice the Ehrenfest time (" +
                std::to_string(cap) + ")");
  ProjectorSplit s;
  s.N = dp.grid.N;
  s.T = T;
  s.alpha_level = alpha_level;
  s.B_s = symmetrized_propagator(dp, T);
  auto d = linalg::svd(s.B_s, true);
  const double smax = d.s(0), smin = d.s(d.s.size() - 1);
  if (!(smin > s.N * std::numeric_limits<double>::epsilon() * std::max(1.0, smax)))
    throw Error("projector_split: polar decomposition failure, B_s is numerically rank deficient");
  s.X = std::move(d.U);
  s.Y = std::move(d.V);
  s.sigma = d.s;
  s.rank_plus = rank_above(s.sigma, std::exp(alpha_level * T));
  return s;
}

struct SplitIdentities {
  double unitarity = 0.0;    // |W^*W - I|_F
  double polar = 0.0;        // |W A - B_s|_F / |B_s|_F
  double sigma_match = 0.0;  // max |eig(A) - s| / s_max, eigenvalues recomputed from A
  double idempotent = 0.0;   // |Pi+^2 - Pi+|_F
  double selfadjoint = 0.0;  // |Pi+^* - Pi+|_F
  double completeness = 0.0; // |Pi+ + Pi- - I|_F
  double commutator = 0.0;   // |[Pi+, A]|_F / s_max
  double minus_bound = 0.0;  // |A Pi-| / e^{alpha T}
};

/// Frobenius norms bound the operator norms from above.
inline SplitIdentities split_identities(const ProjectorSplit& s, bool eigen_check = true) {
  SplitIdentities r;
  const CMatrix I = CMatrix::Identity(s.N, s.N);
  const CMatrix W = s.W(), A = s.A(), Pp = s.Pi_plus(), Pm = s.Pi_minus();
  r.unitarity = (W.adjoint() * W - I).norm();
  r.polar = (W * A - s.B_s).norm() / s.B_s.norm();
  if (eigen_check) {
    RVector ev = linalg::hermitian_eig(A, false).values.reverse();
    r.sigma_match = (ev - s.sigma).cwiseAbs().maxCoeff() / s.sigma(0);
  }
  r.idempotent = (Pp * Pp - Pp).norm();
  r.selfadjoint = (Pp.adjoint() - Pp).norm();
  r.completeness = (Pp + Pm - I).norm();
  r.commutator = (Pp * A - A * Pp).norm() / s.sigma(0);
  r.minus_bound = s.norm_A_minus() / std::exp(s.alpha_level * s.T);
  return r;
}

/// Singular triplets of B_s above e^{alpha T} only, through the eigenpairs of B_s^* B_s.
struct PlusPart {
  int N = 0, T = 0, rank_plus = 0;
  double alpha_level = 0.0;
  CMatrix X, Y;   // N x rank
  RVector sigma;  // descending
};

inline PlusPart plus_part(const DampedPropagator& dp, int T, double alpha_level) {
  PlusPart p;
  p.N = dp.grid.N;
  p.T = T;
  p.alpha_level = alpha_level;
  CMatrix B = symmetrized_propagator(dp, T);
  const double level = std::exp(alpha_level * T);
  auto e = linalg::hermitian_eig_above(CMatrix(B.adjoint() * B), level * level);
  p.rank_plus = int(e.values.size());
  p.sigma = e.values.reverse().cwiseMax(0.0).cwiseSqrt();
  p.Y = e.vectors.rowwise().reverse();
  p.X = B * p.Y;
  for (int c = 0; c < p.rank_plus; ++c) p.X.col(c) /= p.sigma(c);
  return p;
}

namespace detail {
/// |Pi+ U^T W Pi+| = |Y+^* U^T X+| since W Y+ = X+.
inline double plus_norm(const DampedPropagator& dp, int T, const CMatrix& Xp, const CMatrix& Yp) {
  if (Xp.cols() == 0) return 0.0;
  qtorus::CatOperator cat(dp.map.linear_part(), dp.grid);
  CMatrix z = Xp;
  cat.apply(z, T);
  return linalg::spectral_norm(CMatrix(Yp.adjoint() * z));
}
} // namespace detail

inline double dispersion_norm(const DampedPropagator& dp, const ProjectorSplit& s) {
  return detail::plus_norm(dp, s.T, s.X.leftCols(s.rank_plus), s.Y.leftCols(s.rank_plus));
}

inline double dispersion_norm(const DampedPropagator& dp, const PlusPart& p) {
  return detail::plus_norm(dp, p.T, p.X, p.Y);
}

struct SymbolCheck {
  double max_rel_dev = 0.0;  // max |<e, A e> / e^{T <q>_{T,sym}} - 1|
  double fitted_C = 0.0;     // max_rel_dev * N^{1/2 - eps}
  int points = 0;
};

/// <e_rho, A e_rho> against exp(T <q>_{T,sym}(rho)) on a 10 x 10 grid shifted off the lattice.
inline SymbolCheck symbol_check(const DampedPropagator& dp, const ProjectorSplit& s, double eps = 0.05) {
  SymbolCheck r;
  const CMatrix A = s.A();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      TorusPoint rho((i + 0.37) / 10.0, (j + 0.61) / 10.0);
      CVector e = qtorus::coherent_state(rho, dp.grid).vector;
      double meas = e.dot(A * e).real();
      double pred = s.T == 0 ? 1.0 : std::exp(s.T * classical::birkhoff_average(dp.map, dp.q, rho, s.T, true));
      r.max_rel_dev = std::max(r.max_rel_dev, std::fabs(meas / pred - 1.0));
      ++r.points;
    }
  r.fitted_C = r.max_rel_dev * std::pow(double(dp.grid.N), 0.5 - eps);
  return r;
}

struct NormScanRow {
  int N = 0, T = 0, rank_plus = 0;
  double norm = 0.0;
};

struct NormScan {
  double alpha_level = 0.0;
  double beta = 0.0;        // beta(alpha)
  double lambda_max = 0.0;
  std::vector<NormScanRow> rows;
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();  // norm ~ N^{-exponent}
  double predicted() const { return beta / lambda_max; }
};

/// |Pi+ U^T W Pi+| along an N ladder, each N at its own even Ehrenfest time.
inline NormScan dispersion_norm_scan(const TorusMap& map, const Observable& q, const std::vector<int>& Ns,
                                     double alpha_level, double beta, double eps = 0.05) {
  if (!(beta > 0)) throw Error("dispersion_norm_scan: beta(alpha) must be positive");
  NormScan sc;
  sc.alpha_level = alpha_level;
  sc.beta = beta;
  sc.lambda_max = std::log(map.linear_part().lambda());
  std::vector<double> lx, ly;
  for (int N : Ns) {
    qtorus::HilbertGrid g{N};
    auto dp = qtorus::damped_propagator(map, q, g);
    int T = ehrenfest_time(N, eps, sc.lambda_max).T;
    auto p = plus_part(dp, T, alpha_level);
    NormScanRow row{N, T, p.rank_plus, dispersion_norm(dp, p)};
    sc.rows.push_back(row);
    if (row.norm > 0) {
      lx.push_back(std::log(double(N)));
      ly.push_back(std::log(row.norm));
    }
  }
  if (lx.size() >= 2) sc.fitted_exponent = -ls_slope(lx, ly);
  return sc;
}

struct AssembledBound {
  int T = 0;
  double q_plus = 0.0, eps = 0.0, alpha_level = 0.0, beta = 0.0;
  double total = 0.0;                        // |V^{2T}| = |A U^T W A|
  double plus_plus = 0.0, cross = 0.0, minus_minus = 0.0;  // block norms in the Y basis
  double norm_A_plus = 0.0, norm_A_minus = 0.0, dispersion = 0.0;
  double predicted_plus_plus = 0.0, predicted_cross = 0.0, predicted_minus_minus = 0.0;
  bool factor_bounds = false;  // each block below its product of factor norms
  bool triangle = false;       // total <= sum of blocks
  bool predicted_terms = false;    // each block below its predicted term
};

/// |V^{2T}| split as Pi+ Pi+, cross and Pi- Pi- terms; predicted terms e^{2T(q+ + eps)}(e^{-T beta}, e^{T(alpha-q+)}, e^{2T(alpha-q+)}).
inline AssembledBound assembled_bound(const DampedPropagator& dp, const ProjectorSplit& s, double q_plus, double beta,
                                      double eps) {
  AssembledBound r;
  r.T = s.T;
  r.q_plus = q_plus;
  r.eps = eps;
  r.alpha_level = s.alpha_level;
  r.beta = beta;
  qtorus::CatOperator cat(dp.map.linear_part(), dp.grid);
  CMatrix z = s.X;
  cat.apply(z, s.T);
  CMatrix G = s.Y.adjoint() * z;  // Y^* U^T W Y
  r.dispersion = s.rank_plus ? linalg::spectral_norm(G.topLeftCorner(s.rank_plus, s.rank_plus)) : 0.0;
  G = s.sigma.cast<cplx>().asDiagonal() * G * s.sigma.cast<cplx>().asDiagonal();
  const int r0 = s.rank_plus, r1 = s.N - s.rank_plus;
  r.total = linalg::spectral_norm(G);
  r.plus_plus = r0 ? linalg::spectral_norm(G.topLeftCorner(r0, r0)) : 0.0;
  r.minus_minus = r1 ? linalg::spectral_norm(G.bottomRightCorner(r1, r1)) : 0.0;
  r.cross = (r0 && r1) ? std::max(linalg::spectral_norm(G.topRightCorner(r0, r1)),
                                  linalg::spectral_norm(G.bottomLeftCorner(r1, r0)))
                       : 0.0;
  r.norm_A_plus = s.norm_A_plus();
  r.norm_A_minus = s.norm_A_minus();
  const double slack = 1.0 + 1e-10;
  r.factor_bounds = r.plus_plus <= slack * r.norm_A_plus * r.norm_A_plus * r.dispersion &&
                    r.cross <= slack * r.norm_A_plus * r.norm_A_minus &&
                    r.minus_minus <= slack * r.norm_A_minus * r.norm_A_minus;
  r.triangle = r.total <= slack * (r.plus_plus + 2 * r.cross + r.minus_minus);
  const double pre = std::exp(2 * s.T * (q_plus + eps));
  r.predicted_plus_plus = pre * std::exp(-s.T * beta);
  r.predicted_cross = pre * std::exp(s.T * (s.alpha_level - q_plus));
  r.predicted_minus_minus = pre * std::exp(2 * s.T * (s.alpha_level - q_plus));
  r.predicted_terms = r.plus_plus <= r.predicted_plus_plus && r.cross <= r.predicted_cross &&
                  r.minus_minus <= r.predicted_minus_minus;
  return r;
}

struct CriticalLevel {
  double alpha_c = 0.0;
  double gamma_max = 0.0;  // (q+ - alpha_c)/2; certified gaps lie below it
  double residual = 0.0;   // |beta(alpha_c) - (q+ - alpha_c)|
  double q_plus = 0.0;
};

/// Root of beta(alpha) = q+ - alpha on (q_bar, q+) by bisection.
inline CriticalLevel critical_level(const thermo::RateFunctionTable& t, double q_plus, double lambda_max,
                                    double nu_min, double tol = 1e-6) {
  auto f = [&](double a) { return thermo::beta_of_alpha(t, a, lambda_max, nu_min) - (q_plus - a); };
  double lo = t.q_bar, hi = q_plus;
  if (!(hi > lo)) throw Error("critical_level: empty interval (q_bar, q_plus)");
  double flo = f(lo), fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0) == (fhi > 0))
    throw Error("critical_level: condition0 fails everywhere (no sign change of beta(alpha) - (q_plus - alpha))");
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  CriticalLevel c;
  c.alpha_c = 0.5 * (lo + hi);
  c.q_plus = q_plus;
  c.gamma_max = 0.5 * (q_plus - c.alpha_c);
  c.residual = std::fabs(f(c.alpha_c));
  return c;
}

struct Certification {
  double gamma = 0.0;
  double measured = 0.0;  // |V^{2T}|
  double bound = 0.0;     // e^{2T(q+ - gamma)}
  bool holds() const { return measured <= bound; }
};

inline Certification certify_gap(const DampedPropagator& dp, int T, double q_plus, double gamma) {
  Certification c;
  c.gamma = gamma;
  c.measured = linalg::spectral_norm(linalg::matrix_power(dp.V, 2L * T));
  c.bound = std::exp(2.0 * T * (q_plus - gamma));
  return c;
}

struct OverlapCheck {
  double measured = 0.0;     // |<U^{-T/2} e2, U^{T/2} W e1>|
  double bound_shape = 0.0;  // 1/sqrt(J+_{T/2}(rho1) J+_{T/2}(Phi^{-T/2} rho2)) = lambda^{-T/2}
  double w_defect = 0.0;     // |(W - I) e1|
};

/// W = nullptr stands for the identity.
inline OverlapCheck coherent_overlap_check(const DampedPropagator& dp, const CMatrix* W, const TorusPoint& rho1,
                                           const TorusPoint& rho2, int T) {
  if (T < 0 || T % 2) throw Error("coherent_overlap_check: T must be a nonnegative even integer");
  const double lmax = std::log(dp.map.linear_part().lambda());
  if (T > ehrenfest_time(dp.grid.N, 0.0, lmax).T)
    throw Error("coherent_overlap_check: T exceeds the Ehrenfest time");
  qtorus::CatOperator cat(dp.map.linear_part(), dp.grid);
  CMatrix e1 = qtorus::coherent_state(rho1, dp.grid).vector;
  CMatrix e2 = qtorus::coherent_state(rho2, dp.grid).vector;
  OverlapCheck r;
  CMatrix w1 = W ? CMatrix(*W * e1) : e1;
  r.w_defect = (w1 - e1).norm();
  cat.apply(w1, T / 2);
  cat.apply(e2, T / 2, true);
  r.measured = std::abs(e2.col(0).dot(w1.col(0)));
  r.bound_shape = std::pow(dp.map.linear_part().lambda(), -0.5 * T);
  return r;
}

} // namespace dampedlab::dispersion

#pragma once

#include "dampedlab/core.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace dampedlab::linalg {

struct EigResult {
  CVector values;
  CMatrix vectors;  // columns, unit 2-norm
};

struct HermitianEigResult {
  RVector values;  // ascending
  CMatrix vectors;
};

struct SvdResult {
  CMatrix U;
  RVector s;  // descending
  CMatrix V;  // A = U diag(s) V^*
};

namespace detail {
inline void check_square(const CMatrix& a, const char* who) {
  if (a.rows() != a.cols()) throw Error(std::string(who) + ": matrix must be square");
}
} // namespace detail

/// General complex eigenproblem (zgeev). Throws with the matrix hash on failure.
inline EigResult eig(const CMatrix& a, bool want_vectors = true) {
  detail::check_square(a, "eig");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  EigResult r;
  r.values.resize(n);
  if (n == 0) return r;
  CMatrix work = a;
  if (want_vectors) r.vectors.resize(n, n);
  lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, work.data(), n,
                                  r.values.data(), nullptr, 1,
                                  want_vectors ? r.vectors.data() : nullptr, want_vectors ? n : 1);
  if (info != 0)
    throw Error("eigensolver did not converge (zgeev info=" + std::to_string(info) +
                ", matrix " + matrix_hash(a) + ")");
  return r;
}

inline HermitianEigResult hermitian_eig(const CMatrix& a, bool want_vectors = true) {
  detail::check_square(a, "hermitian_eig");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  HermitianEigResult r;
  r.values.resize(n);
  if (n == 0) return r;
  r.vectors = 0.5 * (a + a.adjoint());
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'U', n, r.vectors.data(), n,
                                   r.values.data());
  if (info != 0)
    throw Error("Hermitian eigensolver failed (zheevd info=" + std::to_string(info) + ", matrix " +
                matrix_hash(a) + ")");
  if (!want_vectors) r.vectors.resize(0, 0);
  return r;
}

/// Eigenpairs of a Hermitian matrix with eigenvalue >= lo (zheevr, range 'V'), ascending.
inline HermitianEigResult hermitian_eig_above(const CMatrix& a, double lo) {
  detail::check_square(a, "hermitian_eig_above");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  HermitianEigResult r;
  if (n == 0) return r;
  CMatrix work = 0.5 * (a + a.adjoint());
  const double hi = work.cwiseAbs().rowwise().sum().maxCoeff() * 2.0 + 1.0;
  if (!(lo < hi)) return r;
  RVector w(n);
  CMatrix z(n, n);
  std::vector<lapack_int> isuppz(2 * std::size_t(n));
  lapack_int found = 0;
  lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'U', n, work.data(), n, lo, hi, 0, 0, 0.0, &found,
                                   w.data(), z.data(), n, isuppz.data());
  if (info != 0)
    throw Error("Hermitian eigensolver failed (zheevr info=" + std::to_string(info) + ", matrix " +
                matrix_hash(a) + ")");
  r.values = w.head(found);
  r.vectors = z.leftCols(found);
  return r;
}

inline SvdResult svd(const CMatrix& a, bool want_vectors = true) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  SvdResult r;
  r.s.resize(k);
  if (k == 0) return r;
  CMatrix work = a;
  CMatrix vt;
  if (want_vectors) {
    r.U.resize(m, k);
    vt.resize(k, n);
  }
  lapack_int info;
  if (want_vectors) {
    // zgesdd returns wrong singular vectors from n = 256 on with the system LAPACK; zgesvd does not.
    std::vector<double> superb(static_cast<std::size_t>(k));
    info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), m, r.s.data(), r.U.data(), m, vt.data(),
                          k, superb.data());
  } else {
    info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, r.s.data(), nullptr, 1, nullptr, 1);
  }
  if (info != 0)
    throw Error("SVD failed (info=" + std::to_string(info) + ", matrix " + matrix_hash(a) + ")");
  if (want_vectors) r.V = vt.adjoint();
  return r;
}

inline RVector singular_values(const CMatrix& a) { return svd(a, false).s; }

inline double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

inline double smallest_singular_value(const CMatrix& a) {
  RVector s = singular_values(a);
  return s.size() ? s(s.size() - 1) : 0.0;
}

/// exp(H) for Hermitian H through its eigendecomposition.
inline CMatrix expm_hermitian(const CMatrix& h) {
  auto e = hermitian_eig(h);
  RVector ex = e.values.array().exp();
  return e.vectors * ex.asDiagonal() * e.vectors.adjoint();
}

inline double unitarity_defect(const CMatrix& u) {
  CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return spectral_norm(d);
}

inline bool is_diagonal(const CMatrix& a, double tol = 0.0) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && std::abs(a(i, j)) > tol) return false;
  return true;
}

/// Integer matrix power by squaring.
inline CMatrix matrix_power(const CMatrix& a, long n) {
  detail::check_square(a, "matrix_power");
  if (n < 0) throw Error("matrix_power: negative exponent");
  CMatrix result = CMatrix::Identity(a.rows(), a.cols());
  CMatrix base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

} // namespace dampedlab::linalg

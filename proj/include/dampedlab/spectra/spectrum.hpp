#pragma once

#include "dampedlab/linalg.hpp"
#include "dampedlab/qtorus/propagator.hpp"

#include <algorithm>
#include <cfloat>
#include <string>
#include <vector>

namespace dampedlab::spectra {

enum class SourceKind { map, wave };

struct SpectrumRecord {
  std::string source;
  SourceKind kind = SourceKind::map;
  int dimension = 0;  // N for maps, matrix size for waves
  std::vector<cplx> eigenvalues;   // ordered with decay_rates
  std::vector<double> decay_rates; // descending
  double residual = 0.0;
  double trace_defect = 0.0;
};

struct EigOptions {
  int dense_cap = 4096;
  double residual_tol = 1e-8;
  bool check = true;
};

/// log|lambda| for maps, -Im tau for waves.
inline double decay_rate(cplx v, SourceKind kind) {
  if (kind == SourceKind::map) return std::abs(v) > 0 ? std::log(std::abs(v)) : -std::numeric_limits<double>::infinity();
  return -v.imag();
}

namespace detail {
inline void sort_record(SpectrumRecord& r) {
  std::vector<std::size_t> idx(r.eigenvalues.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> g(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) g[i] = decay_rate(r.eigenvalues[i], r.kind);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (g[a] != g[b]) return g[a] > g[b];
    if (r.eigenvalues[a].real() != r.eigenvalues[b].real()) return r.eigenvalues[a].real() < r.eigenvalues[b].real();
    return r.eigenvalues[a].imag() < r.eigenvalues[b].imag();
  });
  std::vector<cplx> ev(idx.size());
  r.decay_rates.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    ev[i] = r.eigenvalues[idx[i]];
    r.decay_rates[i] = g[idx[i]];
  }
  r.eigenvalues = std::move(ev);
}
} // namespace detail

/// Full dense eigendecomposition with residual and trace checks.
/// The residual is max ||op x - lambda x|| over unit eigenvectors, scaled by max(1, ||op||_F / sqrt(N)).
inline SpectrumRecord eigendecompose(const CMatrix& op, std::string source = "", SourceKind kind = SourceKind::map,
                                     const EigOptions& opt = {}) {
  linalg::detail::check_square(op, "eigendecompose");
  const Eigen::Index n = op.rows();
  if (n > opt.dense_cap)
    throw Error("eigendecompose: N = " + std::to_string(n) + " exceeds dense cap " + std::to_string(opt.dense_cap));
  auto e = linalg::eig(op, opt.check);
  SpectrumRecord r;
  r.source = std::move(source);
  r.kind = kind;
  r.dimension = int(n);
  r.eigenvalues.assign(e.values.data(), e.values.data() + n);
  if (opt.check && n > 0) {
    CMatrix res = op * e.vectors - e.vectors * e.values.asDiagonal();
    double scale = std::max(1.0, op.norm() / std::sqrt(double(n)));
    r.residual = res.colwise().norm().maxCoeff() / scale;
    r.trace_defect = std::abs(e.values.sum() - op.trace());
    if (!(r.residual < opt.residual_tol))
      throw Error("eigendecompose: residual " + std::to_string(r.residual) + " for matrix " + matrix_hash(op));
    if (!(r.trace_defect <= 1e-8 * double(n) * scale))
      throw Error("eigendecompose: trace defect " + std::to_string(r.trace_defect) + " for matrix " + matrix_hash(op));
  }
  detail::sort_record(r);
  return r;
}

inline SpectrumRecord eigendecompose(const qtorus::DampedPropagator& dp, const EigOptions& opt = {}) {
  return eigendecompose(dp.V, "qmap N=" + std::to_string(dp.grid.N), SourceKind::map, opt);
}

/// Wraps wave eigenfrequencies computed elsewhere.
inline SpectrumRecord wave_record(const std::vector<cplx>& taus, double residual, std::string source = "wave") {
  SpectrumRecord r;
  r.source = std::move(source);
  r.kind = SourceKind::wave;
  r.dimension = int(taus.size());
  r.eigenvalues = taus;
  r.residual = residual;
  detail::sort_record(r);
  return r;
}

struct BandReport {
  int violations = 0;
  double gap = 0.0;  // q_plus - max gamma
  double max_rate = 0.0;
  double min_rate = 0.0;
};

inline BandReport band_check(const SpectrumRecord& rec, double q_minus, double q_plus, double eps) {
  BandReport b;
  if (rec.decay_rates.empty()) throw Error("band_check: empty record");
  for (double g : rec.decay_rates)
    if (g < q_minus - eps || g > q_plus + eps) ++b.violations;
  b.max_rate = rec.decay_rates.front();
  b.min_rate = rec.decay_rates.back();
  b.gap = q_plus - b.max_rate;
  return b;
}

struct Concentration {
  int N = 0;
  double fraction = 0.0;
  std::vector<int> histogram;  // bins over [q_minus, q_plus]
};

struct ConcentrationReport {
  std::vector<Concentration> entries;
  bool monotone = true;  // fractions nondecreasing in N
};

inline ConcentrationReport concentration_histogram(const std::vector<const SpectrumRecord*>& records, double q_bar,
                                                   double eps, double q_minus, double q_plus, int bins = 64) {
  ConcentrationReport rep;
  int lastN = 0;
  for (const SpectrumRecord* r : records) {
    if (r->dimension < lastN) throw Error("concentration_histogram: records must be sorted by N");
    lastN = r->dimension;
    Concentration c;
    c.N = r->dimension;
    c.histogram.assign(bins, 0);
    int inside = 0;
    for (double g : r->decay_rates) {
      if (std::fabs(g - q_bar) <= eps) ++inside;
      if (q_plus > q_minus) {
        int b = int(std::floor((g - q_minus) / (q_plus - q_minus) * bins));
        c.histogram[std::clamp(b, 0, bins - 1)]++;
      } else {
        c.histogram[0]++;
      }
    }
    c.fraction = r->decay_rates.empty() ? 0.0 : double(inside) / double(r->decay_rates.size());
    if (!rep.entries.empty() && c.fraction < rep.entries.back().fraction) rep.monotone = false;
    rep.entries.push_back(std::move(c));
  }
  return rep;
}

/// #{gamma_k >= alpha}
inline int count_above(const SpectrumRecord& r, double alpha) {
  return int(std::count_if(r.decay_rates.begin(), r.decay_rates.end(), [&](double g) { return g >= alpha; }));
}

struct CountReport {
  double alpha = 0.0;
  std::vector<std::pair<int, int>> counts;
  double slope = 0.0;
  double slope_bound = 0.0;
};

/// Least-squares slope of log count against log N. Entries with zero count are left out of the fit.
inline CountReport fractal_weyl_regression(const std::vector<const SpectrumRecord*>& records, double alpha,
                                           double h_alpha, double lambda_max) {
  std::vector<int> Ns;
  for (auto* r : records) Ns.push_back(r->dimension);
  std::sort(Ns.begin(), Ns.end());
  Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
  if (Ns.size() < 4 || Ns.back() < 8 * Ns.front())
    throw Error("fractal_weyl_regression: need >= 4 distinct N spanning a factor >= 8");
  CountReport rep;
  rep.alpha = alpha;
  std::vector<double> lx, ly;
  for (auto* r : records) {
    int c = count_above(*r, alpha);
    rep.counts.push_back({r->dimension, c});
    if (c > 0) {
      lx.push_back(std::log(double(r->dimension)));
      ly.push_back(std::log(double(c)));
    }
  }
  if (lx.empty()) throw Error("fractal_weyl_regression: level above spectrum (alpha = " + std::to_string(alpha) + ")");
  rep.slope = lx.size() >= 2 ? ls_slope(lx, ly) : -std::numeric_limits<double>::infinity();
  rep.slope_bound = 1.0 + h_alpha / lambda_max;
  return rep;
}

/// 1/sigma_min(op - z); +inf when op - z is singular to working precision.
inline double resolvent_norm(const CMatrix& op, cplx z) {
  CMatrix m = op - z * CMatrix::Identity(op.rows(), op.cols());
  RVector s = linalg::singular_values(m);
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  double smin = s(s.size() - 1);
  if (smin <= double(op.rows()) * DBL_EPSILON * std::max(1.0, s(0))) return std::numeric_limits<double>::infinity();
  return 1.0 / smin;
}

struct NormRow {
  int t = 0;
  double norm = 0.0;
  double short_bound = 0.0;     // e^{(q_plus + eps) t}
  double pressure_bound = 0.0;  // e^{t (P(q - phi+/2) + eps)}
};

/// ||V^t|| for every t in t_list (computed by successive multiplication).
inline std::vector<NormRow> propagator_norm_scan(const CMatrix& v, std::vector<int> t_list, double q_plus,
                                                 double pressure_half, double eps) {
  std::sort(t_list.begin(), t_list.end());
  std::vector<NormRow> rows;
  CMatrix p = CMatrix::Identity(v.rows(), v.cols());
  int cur = 0;
  for (int t : t_list) {
    if (t < 0) throw Error("propagator_norm_scan: negative time");
    for (; cur < t; ++cur) p = v * p;
    NormRow r;
    r.t = t;
    r.norm = t == 0 ? 1.0 : linalg::spectral_norm(p);
    r.short_bound = std::exp((q_plus + eps) * t);
    r.pressure_bound = std::exp((pressure_half + eps) * t);
    rows.push_back(r);
  }
  return rows;
}

struct WeylCount {
  int count = 0;
  double prediction = 0.0;
};

/// Eigenfrequencies with Re tau in [lo, hi) and -Im tau <= strip, against the phase-volume count
/// for the flat torus of side 2 pi in dimension dim (1 or 2), multiplicities included.
inline WeylCount weyl_count(const SpectrumRecord& rec, int dim, double lo, double hi,
                            double strip = std::numeric_limits<double>::infinity()) {
  if (rec.kind != SourceKind::wave) throw Error("weyl_count: wave-sourced record required");
  if (dim != 1 && dim != 2) throw Error("weyl_count: dim must be 1 or 2");
  WeylCount w;
  for (const cplx& t : rec.eigenvalues)
    if (t.real() >= lo && t.real() < hi && -t.imag() <= strip) ++w.count;
  w.prediction = dim == 1 ? 2.0 * (hi - lo) : kPi * (hi * hi - lo * lo);
  return w;
}

} // namespace dampedlab::spectra

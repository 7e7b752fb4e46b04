#pragma once

#include "dampedlab/wave/evolve.hpp"

namespace dampedlab::wave {

struct GccReport {
  double min_average = 0.0;       // min over the grid of <a>_T
  double a_minus_estimate = 0.0;  // same minimum at 20 T
  bool gcc = false;
  double worst_angle = 0.0;   // direction (cos, sin) of the minimizing geodesic
  double worst_offset = 0.0;  // its starting x
};

namespace detail {
/// Periodic piecewise-linear table of a(x), 2^16 nodes.
struct ProfileTable {
  std::vector<double> v;
  explicit ProfileTable(const DampingProfile& a, int n = 1 << 16) : v(std::size_t(n) + 1) {
    for (int j = 0; j <= n; ++j) v[std::size_t(j)] = a(double(j) / n);
  }
  double operator()(double x) const {
    const double n = double(v.size() - 1);
    double y = wrap01(x) * n;
    std::size_t i = std::min(std::size_t(y), v.size() - 2);
    double w = y - double(i);
    return (1 - w) * v[i] + w * v[i + 1];
  }
};

/// (1/T) int_0^T a(x0 + c t / 2 pi) dt by composite Simpson.
template <class Profile>
double geodesic_average(const Profile& a, double x0, double c, double T) {
  const int n = 2 * std::max(200, int(std::ceil(64.0 * T * std::max(std::fabs(c), 1e-3))));
  const double h = T / n;
  double s = a(x0) + a(x0 + c * T / kTwoPi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * a(x0 + c * i * h / kTwoPi);
  return s * h / 3.0 / T;
}

inline std::pair<double, std::pair<double, double>> min_average(const DampingProfile& profile, double T, int n_dirs,
                                                               int n_offsets) {
  const ProfileTable a(profile);
  std::vector<double> angles;
  if (profile.dim == 1) {
    angles = {0.0, kPi};
  } else {
    for (int j = 0; j < n_dirs; ++j) angles.push_back(kPi * j / n_dirs);
    angles.push_back(0.5 * kPi);
  }
  double best = std::numeric_limits<double>::infinity();
  std::pair<double, double> arg{0, 0};
  for (double th : angles) {
    double c = std::cos(th);
    if (std::fabs(c) < 1e-15) c = 0.0;
    for (int o = 0; o < n_offsets; ++o) {
      double x0 = double(o) / n_offsets;
      double v = detail::geodesic_average(a, x0, c, T);
      if (v < best) {
        best = v;
        arg = {th, x0};
      }
    }
  }
  return {best, arg};
}
} // namespace detail

/// Straight-line geodesic averages on the flat torus (speed 1, side 2 pi) over a direction/offset grid.
inline GccReport gcc_scan(const DampingProfile& a, double T, int n_dirs = 64, int n_offsets = 200) {
  if (!(T >= 1.0)) throw Error("gcc_scan: T must be >= 1");
  if (n_dirs % 2) ++n_dirs;
  GccReport r;
  auto [m, arg] = detail::min_average(a, T, n_dirs, n_offsets);
  r.min_average = m;
  r.worst_angle = arg.first;
  r.worst_offset = arg.second;
  r.a_minus_estimate = detail::min_average(a, 20.0 * T, n_dirs, n_offsets).first;
  r.gcc = r.min_average > 1e-12;
  return r;
}

struct KochTataru {
  double restricted_norm = 0.0;
  double bound = 0.0;  // exp(-t min <a>_t)
  double min_average = 0.0;
};

/// Energy-norm operator norm of e^{-itA} on the span of all Galerkin modes except the `codim`
/// lowest frequencies (ordered by |k|^2, then k2, then k1). codim >= 1 removes k = 0.
inline KochTataru koch_tataru_check(const WaveGenerator& g, double t, int codim, int n_dirs = 64) {
  if (codim < 1) throw Error("koch_tataru_check: codim must be >= 1 (the k = 0 mode carries no energy)");
  struct Mode {
    double ksq;
    int k2, k1, block, index;
  };
  std::vector<Mode> modes;
  for (int b = 0; b < int(g.blocks.size()); ++b)
    for (int i = 0; i < g.blocks[b].size(); ++i)
      modes.push_back({g.blocks[b].ksq(i), g.blocks[b].k2, g.blocks[b].k1[i], b, i});
  if (codim >= int(modes.size())) throw Error("koch_tataru_check: codim exceeds the mode count");
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) {
    if (x.ksq != y.ksq) return x.ksq < y.ksq;
    if (x.k2 != y.k2) return x.k2 < y.k2;
    return x.k1 < y.k1;
  });
  std::vector<std::vector<bool>> removed(g.blocks.size());
  for (std::size_t b = 0; b < g.blocks.size(); ++b) removed[b].assign(std::size_t(g.blocks[b].size()), false);
  for (int j = 0; j < codim; ++j) removed[std::size_t(modes[j].block)][std::size_t(modes[j].index)] = true;

  KochTataru r;
  for (std::size_t b = 0; b < g.blocks.size(); ++b) {
    const Block& blk = g.blocks[b];
    const int m = blk.size();
    std::vector<int> cols;
    for (int i = 0; i < m; ++i)
      if (!removed[b][std::size_t(i)]) {
        cols.push_back(i);
        cols.push_back(m + i);
      }
    if (cols.empty()) continue;
    CMatrix P = (CMatrix(-kI * t * blk.A)).exp();
    RVector wrow(2 * m);
    for (int i = 0; i < m; ++i) {
      wrow(i) = std::sqrt(0.5 * blk.ksq(i));
      wrow(m + i) = std::sqrt(0.5);
    }
    CMatrix S(2 * m, Eigen::Index(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) S.col(Eigen::Index(c)) = wrow.cast<cplx>().asDiagonal() * P.col(cols[c]) / wrow(cols[c]);
    r.restricted_norm = std::max(r.restricted_norm, linalg::spectral_norm(S));
  }
  r.min_average = detail::min_average(g.a, t, n_dirs, 200).first;
  r.bound = std::exp(-t * r.min_average);
  return r;
}

} // namespace dampedlab::wave

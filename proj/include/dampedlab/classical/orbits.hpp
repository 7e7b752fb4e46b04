#pragma once

#include "dampedlab/classical/torus_map.hpp"

#include <numeric>

namespace dampedlab::classical {

/// Closed orbit of a linear map, stored exactly as integer residues over a common denominator.
struct PeriodicOrbit {
  std::vector<TorusPoint> points;
  std::vector<std::pair<std::int64_t, std::int64_t>> residues;
  std::int64_t denominator = 1;
  int period = 0;

  double average(const Observable& q) const {
    double s = 0.0;
    for (const auto& r : points) s += q(r.x, r.p);
    return s / period;
  }
};

inline constexpr int kDefaultOrbitCap = 16;

namespace detail {

using i128 = __int128;

inline LinearMap checked_power(const LinearMap& m, int n, int cap) {
  if (n < 1) throw Error("periodic_orbits: n must be positive");
  if (n > cap)
    throw Error("periodic_orbits: n = " + std::to_string(n) + " exceeds the overflow cap " + std::to_string(cap));
  i128 a = 1, b = 0, c = 0, d = 1;
  const i128 limit = i128(1) << 60;
  for (int k = 0; k < n; ++k) {
    i128 na = m.a * a + m.b * c, nb = m.a * b + m.b * d;
    i128 nc = m.c * a + m.d * c, nd = m.c * b + m.d * d;
    a = na, b = nb, c = nc, d = nd;
    auto big = [&](i128 v) { return v > limit || v < -limit; };
    if (big(a) || big(b) || big(c) || big(d)) throw Error("periodic_orbits: matrix power overflows");
  }
  return {long(a), long(b), long(c), long(d)};
}

inline std::int64_t mod(i128 v, std::int64_t m) {
  i128 r = v % m;
  if (r < 0) r += m;
  return std::int64_t(r);
}

/// Extended gcd: returns g = s*a + t*b with g >= 0.
inline std::int64_t egcd(std::int64_t a, std::int64_t b, std::int64_t& s, std::int64_t& t) {
  std::int64_t s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (b != 0) {
    std::int64_t qt = a / b;
    std::tie(a, b) = std::make_pair(b, a - qt * b);
    std::tie(s0, s1) = std::make_pair(s1, s0 - qt * s1);
    std::tie(t0, t1) = std::make_pair(t1, t0 - qt * t1);
  }
  if (a < 0) {
    a = -a, s0 = -s0, t0 = -t0;
  }
  s = s0, t = t0;
  return a;
}

} // namespace detail

/// All x with (M^n - I)x in Z^2, as residues (u,v) with x = (u,v)/D, D = |det(M^n - I)|.
inline std::vector<std::pair<std::int64_t, std::int64_t>> fixed_point_residues(const LinearMap& m, int n,
                                                                               std::int64_t& denominator,
                                                                               int cap = kDefaultOrbitCap) {
  using detail::i128;
  LinearMap p = detail::checked_power(m, n, cap);
  i128 A11 = p.a - 1, A12 = p.b, A21 = p.c, A22 = p.d - 1;
  i128 det = A11 * A22 - A12 * A21;
  if (det == 0) throw Error("periodic_orbits: M^n - I is singular");
  if (det < 0) det = -det;
  if (det > (i128(1) << 31)) throw Error("periodic_orbits: fixed-point count exceeds storage cap");
  const std::int64_t D = std::int64_t(det);
  denominator = D;
  // Lattice adj(A) Z^2 + D Z^2 in lower-triangular form {(h11,h21), (0,h22)}.
  std::int64_t h11 = D, h21 = 0, h22 = D;
  auto add = [&](std::int64_t gx, std::int64_t gy) {
    gx = detail::mod(gx, D);
    gy = detail::mod(gy, D);
    std::int64_t s, t;
    std::int64_t g = detail::egcd(h11, gx, s, t);
    i128 ny = i128(s) * h21 + i128(t) * gy;
    i128 wy = i128(gx / g) * h21 - i128(h11 / g) * gy;
    h11 = g;
    h21 = detail::mod(ny, D);
    std::int64_t w = detail::mod(wy, D), ss, tt;
    h22 = detail::egcd(h22, w, ss, tt);
    h21 = detail::mod(h21, h22);
  };
  add(std::int64_t(A22), std::int64_t(-A21));
  add(std::int64_t(-A12), std::int64_t(A11));
  std::vector<std::pair<std::int64_t, std::int64_t>> pts;
  pts.reserve(std::size_t(D));
  for (std::int64_t i = 0; i < D / h11; ++i)
    for (std::int64_t j = 0; j < D / h22; ++j)
      pts.emplace_back(i * h11, detail::mod(i128(i) * h21 + i128(j) * h22, D));
  if (std::int64_t(pts.size()) != D) throw Error("periodic_orbits: lattice enumeration inconsistent");
  return pts;
}

/// Points of Fix(M^n) grouped into primitive orbits (period divides n).
inline std::vector<PeriodicOrbit> periodic_orbits(const TorusMap& map, int n, int cap = kDefaultOrbitCap) {
  if (!map.is_linear()) throw Error("periodic_orbits: only linear maps are supported");
  const LinearMap& m = map.linear_part();
  std::int64_t D = 1;
  auto pts = fixed_point_residues(m, n, D, cap);
  std::vector<std::int64_t> keys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) keys[i] = pts[i].first * D + pts[i].second;
  std::sort(keys.begin(), keys.end());
  std::vector<char> seen(keys.size(), 0);
  std::vector<PeriodicOrbit> orbits;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (seen[i]) continue;
    PeriodicOrbit orb;
    orb.denominator = D;
    std::int64_t u = keys[i] / D, v = keys[i] % D;
    for (;;) {
      std::int64_t key = u * D + v;
      auto it = std::lower_bound(keys.begin(), keys.end(), key);
      if (it == keys.end() || *it != key) throw Error("periodic_orbits: orbit left the fixed-point set");
      std::size_t idx = std::size_t(it - keys.begin());
      if (seen[idx]) break;
      seen[idx] = 1;
      orb.residues.emplace_back(u, v);
      orb.points.emplace_back(double(u) / double(D), double(v) / double(D));
      std::int64_t nu = detail::mod(detail::i128(m.a) * u + detail::i128(m.b) * v, D);
      std::int64_t nv = detail::mod(detail::i128(m.c) * u + detail::i128(m.d) * v, D);
      u = nu, v = nv;
    }
    orb.period = int(orb.points.size());
    orbits.push_back(std::move(orb));
  }
  return orbits;
}

inline std::size_t count_points(const std::vector<PeriodicOrbit>& orbits) {
  std::size_t c = 0;
  for (const auto& o : orbits) c += o.points.size();
  return c;
}

/// Orbits of every period from 1 to max_period, each listed once.
inline std::vector<PeriodicOrbit> orbits_up_to(const TorusMap& map, int max_period, int cap = kDefaultOrbitCap) {
  std::vector<PeriodicOrbit> out;
  std::vector<bool> covered(max_period + 1, false);
  for (int n = max_period; n >= 1; --n) {
    bool needed = false;
    for (int d = 1; d <= n; ++d)
      if (n % d == 0 && !covered[d]) needed = true;
    if (!needed) continue;
    for (auto& o : periodic_orbits(map, n, cap))
      if (!covered[o.period]) out.push_back(std::move(o));
    for (int d = 1; d <= n; ++d)
      if (n % d == 0) covered[d] = true;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.period < b.period; });
  return out;
}

/// Closed-form |det(M^n - I)| = |lambda^n + lambda^-n - 2| for the signed eigenvalue.
inline double fixed_point_count_closed_form(const LinearMap& m, int n) {
  double mu = m.unstable_eigenvalue();
  return std::fabs(std::pow(mu, n) + std::pow(mu, -n) - 2.0);
}

} // namespace dampedlab::classical

#pragma once

#include "dampedlab/dispersion/partition.hpp"
#include "dampedlab/thermo.hpp"

#include <functional>

namespace dampedlab::dispersion {

using qtorus::DampedPropagator;

/// b(j) = max over cell j of exp(q(Phi^{-1} rho)), sampled on an s x s grid per cell (edges included).
inline std::vector<double> cell_weights(const TorusMap& map, const Observable& q, int m, int s = 48) {
  std::vector<double> b(std::size_t(m) * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i <= s; ++i)
        for (int k = 0; k <= s; ++k) {
          TorusPoint r((a + double(i) / s) / m, (c + double(k) / s) / m);
          const TorusPoint s0 = map.step_inverse(r);
          best = std::max(best, q(s0.x, s0.p));
        }
      b[std::size_t(a * m + c)] = std::exp(best);
    }
  return b;
}

/// V applied to the columns of x: U B with U through its generator factorization.
class PropagatorApply {
public:
  explicit PropagatorApply(const DampedPropagator& dp) : dp_(dp), cat_(dp.map.linear_part(), dp.grid) {}
  void operator()(CMatrix& x) const {
    if (dp_.diagonal_damping)
      x = dp_.B.diagonal().asDiagonal() * x;
    else
      x = dp_.B * x;
    cat_.apply(x);
  }
  CVector operator()(const CVector& v) const {
    CMatrix x = v;
    (*this)(x);
    return x.col(0);
  }
  const qtorus::CatOperator& cat() const { return cat_; }

private:
  const DampedPropagator& dp_;
  qtorus::CatOperator cat_;
};

/// V_alpha = Pi_{alpha_n} V ... Pi_{alpha_1} V as a dense matrix.
inline CMatrix path_operator(const DampedPropagator& dp, const QuantumPartition& P, const std::vector<int>& alpha) {
  CMatrix x = CMatrix::Identity(dp.grid.N, dp.grid.N);
  PropagatorApply V(dp);
  CVector out;
  for (int j : alpha) {
    if (j < 0 || j >= P.J) throw Error("path_operator: cell index out of range");
    V(x);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      P.apply(j, x.col(c), out);
      x.col(c) = out;
    }
  }
  return x;
}

/// Compensated (Kahan) accumulation of complex vectors.
struct KahanVector {
  CVector sum, comp;
  explicit KahanVector(Eigen::Index n) : sum(CVector::Zero(n)), comp(CVector::Zero(n)) {}
  void add(const CVector& v) {
    CVector y = v - comp;
    CVector t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

struct PathOptions {
  /// A branch at depth k stops expanding once |V_alpha psi| < prune * b_alpha * lambda^{-k/2} * |psi|.
  double prune = 1e-2;
  std::size_t max_nodes = 20'000'000;
};

struct PathLeaf {
  std::vector<std::int8_t> alpha;
  double norm = 0.0;
  double b_alpha = 1.0;
};

struct PathTree {
  int n = 0, J = 0, N = 0;
  std::vector<PathLeaf> leaves;
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  std::vector<std::size_t> kept_per_level;
  double max_pruned_norm = 0.0;          // largest norm of a pruned branch
  double remainder_norm = 0.0;           // |sum over pruned branches of V^{n-k} (branch)|
  double reconstruction_defect = 0.0;    // |leaves + evolved remainder - V^n psi|
  double target_norm = 0.0;              // |V^n psi|
};

/// All n-step path components V_alpha psi, depth first with norm pruning.
inline PathTree path_tree(const DampedPropagator& dp, const QuantumPartition& P, const CVector& psi, int n,
                          const std::vector<double>& b, const PathOptions& opt = {}) {
  if (n < 1) throw Error("path_tree: n must be >= 1");
  if (P.grid.N != dp.grid.N) throw Error("path_tree: partition and propagator grids differ");
  if (int(b.size()) != P.J) throw Error("path_tree: cell weight count differs from J");
  if (P.J > 127) throw Error("path_tree: J too large for the path encoding");
  PropagatorApply V(dp);
  const double floor = opt.prune * psi.norm();
  const double shrink = 1.0 / std::sqrt(dp.map.linear_part().lambda());

  PathTree T;
  T.n = n;
  T.J = P.J;
  T.N = dp.grid.N;
  T.kept_per_level.assign(std::size_t(n), 0);
  KahanVector acc(psi.size());
  // Pruned branches at depth k are summed into rem[k]; their subtrees add up to V^{n-k} rem[k].
  std::vector<KahanVector> rem(std::size_t(n) + 1, KahanVector(psi.size()));

  std::vector<std::int8_t> alpha;
  std::vector<CVector> stack_state(std::size_t(n) + 1);
  std::vector<double> stack_b(std::size_t(n) + 1, 1.0);
  stack_state[0] = psi;
  CVector child;

  std::function<void(int)> descend = [&](int depth) {
    CVector w = V(stack_state[std::size_t(depth)]);
    for (int j = 0; j < P.J; ++j) {
      P.apply(j, w, child);
      ++T.nodes;
      if (T.nodes > opt.max_nodes) throw Error("path_tree: node budget exceeded");
      const double nn = child.norm();
      const double bj = stack_b[std::size_t(depth)] * b[std::size_t(j)];
      if (nn < floor * bj * std::pow(shrink, depth + 1) && depth + 1 < n) {
        ++T.pruned;
        T.max_pruned_norm = std::max(T.max_pruned_norm, nn);
        rem[std::size_t(depth) + 1].add(child);
        continue;
      }
      ++T.kept_per_level[std::size_t(depth)];
      alpha.push_back(std::int8_t(j));
      if (depth + 1 == n) {
        acc.add(child);
        T.leaves.push_back({alpha, nn, bj});
      } else {
        stack_state[std::size_t(depth) + 1] = child;
        stack_b[std::size_t(depth) + 1] = bj;
        descend(depth + 1);
      }
      alpha.pop_back();
    }
  };
  descend(0);

  CVector carried = CVector::Zero(psi.size());
  for (int k = 1; k < n; ++k) carried = V(CVector(carried + rem[std::size_t(k)].sum));
  T.remainder_norm = carried.norm();
  CVector target = psi;
  for (int k = 0; k < n; ++k) target = V(target);
  T.target_norm = target.norm();
  T.reconstruction_defect = (acc.sum + carried - target).norm();
  return T;
}

/// |sum_alpha V_alpha - V^n| over all J^n paths, as an operator on the full space (small N only).
inline double operator_reconstruction_defect(const DampedPropagator& dp, const QuantumPartition& P, int n) {
  if (n < 1) throw Error("operator_reconstruction_defect: n must be >= 1");
  const int N = dp.grid.N;
  std::vector<CMatrix> pis;
  for (int j = 0; j < P.J; ++j) pis.push_back(P.dense(j));
  CMatrix sum = CMatrix::Zero(N, N);
  std::function<void(const CMatrix&, int)> rec = [&](const CMatrix& x, int depth) {
    CMatrix w = dp.V * x;
    for (int j = 0; j < P.J; ++j) {
      CMatrix c = pis[std::size_t(j)] * w;
      if (depth + 1 == n)
        sum += c;
      else
        rec(c, depth + 1);
    }
  };
  rec(CMatrix::Identity(N, N), 0);
  return linalg::spectral_norm(sum - linalg::matrix_power(dp.V, n));
}

struct PathBound {
  int n = 0, J = 0, N = 0;
  double lambda = 0.0;
  double fitted_C = 0.0;  // max over leaves of |V_alpha psi| / (sqrt(N) b_alpha lambda^{-n/2})
  double max_norm = 0.0;
  std::size_t paths = 0;
  double reconstruction_defect = 0.0;
};

/// Path norms of a momentum eigenstate against sqrt(N) b_alpha J+(alpha)^{-1/2}, J+ = lambda^n.
inline PathBound path_bound_check(const DampedPropagator& dp, const QuantumPartition& P, int n, double eta,
                                  const PathOptions& opt = {}, PathTree* tree_out = nullptr) {
  const int N = dp.grid.N;
  const int k = int(std::lround(wrap01(eta) * N)) % N;
  CVector e(N);
  for (int j = 0; j < N; ++j) e(j) = std::polar(1.0 / std::sqrt(double(N)), kTwoPi * double(k) * j / N);
  auto b = cell_weights(dp.map, dp.q, P.m);
  PathTree T = path_tree(dp, P, e, n, b, opt);
  PathBound r;
  r.n = n;
  r.J = P.J;
  r.N = N;
  r.lambda = dp.map.linear_part().lambda();
  const double scale = std::sqrt(double(N)) * std::pow(r.lambda, -0.5 * n);
  for (const auto& l : T.leaves) {
    r.fitted_C = std::max(r.fitted_C, l.norm / (scale * l.b_alpha));
    r.max_norm = std::max(r.max_norm, l.norm);
  }
  r.paths = T.leaves.size();
  r.reconstruction_defect = T.reconstruction_defect;
  if (tree_out) *tree_out = std::move(T);
  return r;
}

// ---------------------------------------------------------------------------
// Classical cylinders

using Polygon = std::vector<Eigen::Vector2d>;

inline double polygon_area(const Polygon& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& c = p[(i + 1) % p.size()];
    s += a.x() * c.y() - c.x() * a.y();
  }
  return 0.5 * std::fabs(s);
}

/// Sutherland-Hodgman clip against the half plane sign * (v[axis] - c) >= 0.
inline Polygon clip_half_plane(const Polygon& p, int axis, double c, double sign) {
  Polygon out;
  if (p.empty()) return out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& d = p[(i + 1) % p.size()];
    double fa = sign * (a[axis] - c), fd = sign * (d[axis] - c);
    if (fa >= 0) out.push_back(a);
    if ((fa >= 0) != (fd >= 0)) {
      double t = fa / (fa - fd);
      Eigen::Vector2d v = a + t * (d - a);
      v[axis] = c;
      out.push_back(v);
    }
  }
  return out;
}

struct CylinderStats {
  int m = 0, n = 0;
  std::vector<std::size_t> count_by_start;   // admissible sequences per initial cell
  std::vector<double> weight_by_start;       // sum of b_alpha per initial cell
  std::size_t total = 0;
};

/// Admissible sequences (alpha_1..alpha_n): the cell alpha_1 mapped k times meets alpha_{k+1}
/// with positive area. b_alpha = prod b(alpha_k).
inline CylinderStats enumerate_cylinders(const LinearMap& M, int m, int n, const std::vector<double>& b,
                                         double min_area = 1e-15) {
  M.validate();
  if (m < 1 || n < 1) throw Error("enumerate_cylinders: m and n must be >= 1");
  if (int(b.size()) != m * m) throw Error("enumerate_cylinders: weight count differs from m^2");
  const Eigen::Matrix2d A = M.matrix();
  CylinderStats st;
  st.m = m;
  st.n = n;
  st.count_by_start.assign(std::size_t(m) * m, 0);
  st.weight_by_start.assign(std::size_t(m) * m, 0.0);
  const double h = 1.0 / m;

  std::function<void(int, const std::vector<Polygon>&, int, double)> rec =
      [&](int start, const std::vector<Polygon>& pieces, int depth, double w) {
        if (depth == n) {
          ++st.count_by_start[std::size_t(start)];
          st.weight_by_start[std::size_t(start)] += w;
          return;
        }
        std::map<int, std::vector<Polygon>> children;
        for (const auto& piece : pieces) {
          Polygon img;
          for (const auto& v : piece) img.push_back(A * v);
          double x0 = 1e300, x1 = -1e300, p0 = 1e300, p1 = -1e300;
          for (const auto& v : img) {
            x0 = std::min(x0, v.x());
            x1 = std::max(x1, v.x());
            p0 = std::min(p0, v.y());
            p1 = std::max(p1, v.y());
          }
          for (long ix = long(std::floor(x0 / h)); ix * h < x1; ++ix) {
            Polygon sx = clip_half_plane(clip_half_plane(img, 0, ix * h, 1.0), 0, (ix + 1) * h, -1.0);
            if (sx.size() < 3) continue;
            for (long ip = long(std::floor(p0 / h)); ip * h < p1; ++ip) {
              Polygon c = clip_half_plane(clip_half_plane(sx, 1, ip * h, 1.0), 1, (ip + 1) * h, -1.0);
              if (c.size() < 3 || polygon_area(c) <= min_area) continue;
              const double fx = std::floor(double(ix) / m), fp = std::floor(double(ip) / m);
              for (auto& v : c) v -= Eigen::Vector2d(fx, fp);
              int a = int(ix - long(fx) * m), q = int(ip - long(fp) * m);
              children[a * m + q].push_back(std::move(c));
            }
          }
        }
        for (auto& [cell, ps] : children) rec(start, ps, depth + 1, w * b[std::size_t(cell)]);
      };
  for (int a = 0; a < m; ++a)
    for (int q = 0; q < m; ++q) {
      Polygon sq{{a * h, q * h}, {(a + 1) * h, q * h}, {(a + 1) * h, (q + 1) * h}, {a * h, (q + 1) * h}};
      rec(a * m + q, {sq}, 1, b[std::size_t(a * m + q)]);
    }
  for (auto c : st.count_by_start) st.total += c;
  return st;
}

/// true when cell j2 meets the image of cell j1 with positive area.
inline bool admissible_pair(const LinearMap& M, int m, int j1, int j2) {
  std::vector<double> ones(std::size_t(m) * m, 1.0);
  const Eigen::Matrix2d A = M.matrix();
  const double h = 1.0 / m;
  const int a = j1 / m, q = j1 % m;
  Polygon img;
  for (auto v : Polygon{{a * h, q * h}, {(a + 1) * h, q * h}, {(a + 1) * h, (q + 1) * h}, {a * h, (q + 1) * h}})
    img.push_back(A * v);
  const int a2 = j2 / m, q2 = j2 % m;
  for (int sx = -4; sx <= 4; ++sx)
    for (int sp = -4; sp <= 4; ++sp) {
      double x0 = sx + a2 * h, p0 = sp + q2 * h;
      Polygon c = clip_half_plane(clip_half_plane(img, 0, x0, 1.0), 0, x0 + h, -1.0);
      c = clip_half_plane(clip_half_plane(c, 1, p0, 1.0), 1, p0 + h, -1.0);
      if (c.size() >= 3 && polygon_area(c) > 1e-15) return true;
    }
  return false;
}

struct PressureSum {
  int J = 0, n = 0;
  double lhs = 0.0;  // (1/n) log max_{alpha_1} sum_alpha b_alpha J+(alpha)^{-1/2}
  double rhs = 0.0;  // P(q - phi+/2)
  std::size_t cylinders = 0;
  double difference() const { return lhs - rhs; }
};

inline PressureSum pressure_sum_check(const TorusMap& map, const Observable& q, int J, int n, int n_min = 6,
                                      int n_max = 14) {
  if (!map.is_linear()) throw Error("pressure_sum_check: linear maps only");
  const int m = int(std::lround(std::sqrt(double(J))));
  if (m * m != J) throw Error("pressure_sum_check: J = " + std::to_string(J) + " is not a perfect square");
  const auto& M = map.linear_part();
  auto b = cell_weights(map, q, m);
  auto st = enumerate_cylinders(M, m, n, b);
  PressureSum r;
  r.J = J;
  r.n = n;
  r.cylinders = st.total;
  double best = *std::max_element(st.weight_by_start.begin(), st.weight_by_start.end());
  r.lhs = (std::log(best) - 0.5 * n * std::log(M.lambda())) / n;
  r.rhs = thermo::pressure(map, thermo::Potential{q, -0.5}, n_min, n_max).value;
  return r;
}

} // namespace dampedlab::dispersion

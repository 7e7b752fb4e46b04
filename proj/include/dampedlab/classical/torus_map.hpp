#pragma once

#include "dampedlab/classical/observable.hpp"

#include <functional>
#include <optional>

namespace dampedlab::classical {

struct TorusPoint {
  double x = 0.0;
  double p = 0.0;

  TorusPoint() = default;
  TorusPoint(double x_, double p_) : x(wrap01(x_)), p(wrap01(p_)) {}

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// Distance on the flat torus R^2 / Z^2.
inline double torus_dist(const TorusPoint& a, const TorusPoint& b) {
  return std::hypot(circle_dist(a.x, b.x), circle_dist(a.p, b.p));
}

/// Integer matrix [[a,b],[c,d]] acting on the column (x,p).
struct LinearMap {
  long a = 2, b = 1, c = 1, d = 1;

  long det() const { return a * d - b * c; }
  long trace() const { return a + d; }

  void validate() const {
    if (det() != 1) throw Error("LinearMap: determinant must be 1, got " + std::to_string(det()));
    if (std::labs(trace()) <= 2)
      throw Error("LinearMap: |trace| must exceed 2 for hyperbolicity, got " + std::to_string(trace()));
  }

  /// Leading eigenvalue modulus.
  double lambda() const {
    double t = std::fabs(double(trace()));
    return 0.5 * (t + std::sqrt(t * t - 4.0));
  }
  /// Eigenvalue of largest modulus, with sign.
  double unstable_eigenvalue() const { return trace() > 0 ? lambda() : -lambda(); }

  Eigen::Vector2d unstable_direction() const { return eigenvector(unstable_eigenvalue()); }
  Eigen::Vector2d stable_direction() const { return eigenvector(1.0 / unstable_eigenvalue()); }

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d m;
    m << double(a), double(b), double(c), double(d);
    return m;
  }

  LinearMap inverse() const { return {d, -b, -c, a}; }

  friend LinearMap operator*(const LinearMap& l, const LinearMap& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
  friend bool operator==(const LinearMap&, const LinearMap&) = default;

private:
  Eigen::Vector2d eigenvector(double mu) const {
    // (a - mu) v1 + b v2 = 0
    Eigen::Vector2d v;
    if (b != 0)
      v << double(b), mu - double(a);
    else
      v << mu - double(d), double(c);
    v.normalize();
    if (v(0) < 0 || (v(0) == 0 && v(1) < 0)) v = -v;
    return v;
  }
};

struct TangentOptions {
  int iteration_cap = 64;
  double tolerance = 1e-12;
};

/// Linear automorphism, optionally preceded by the shear kick p -> p + eps*g'(x).
class TorusMap {
public:
  static TorusMap linear(long a, long b, long c, long d) { return linear(LinearMap{a, b, c, d}); }
  static TorusMap linear(const LinearMap& m) {
    m.validate();
    TorusMap t;
    t.lin_ = m;
    return t;
  }

  /// Default threshold (|tr M| - 2)/2 on eps*sup|g''|, with sup|g''| bounded by the coefficient sum.
  static TorusMap perturbed(const LinearMap& m, double eps, const Observable& kick,
                            std::optional<double> threshold = std::nullopt) {
    m.validate();
    if (kick.depends_on_momentum()) throw Error("TorusMap: the kick generator must depend on x only");
    double thr = threshold.value_or(0.5 * (std::fabs(double(m.trace())) - 2.0));
    double curv = 0.0;
    for (const auto& [k, c] : kick.coefficients()) curv += std::abs(c) * std::pow(kTwoPi * k.first, 2);
    if (std::fabs(eps) * curv >= thr)
      throw Error("TorusMap: eps*sup|g''| = " + std::to_string(std::fabs(eps) * curv) +
                  " exceeds the hyperbolicity threshold " + std::to_string(thr));
    TorusMap t;
    t.lin_ = m;
    t.eps_ = eps;
    t.kick_ = kick;
    t.perturbed_ = true;
    return t;
  }

  bool is_linear() const { return !perturbed_ || eps_ == 0.0; }
  bool is_perturbed() const { return perturbed_; }
  const LinearMap& linear_part() const { return lin_; }
  double eps() const { return eps_; }
  const Observable& kick() const { return kick_; }

  TorusPoint step(const TorusPoint& r) const {
    double x = r.x, p = r.p;
    if (perturbed_) p += eps_ * kick_.d_dx(x, 0.0);
    return {lin_.a * x + lin_.b * p, lin_.c * x + lin_.d * p};
  }

  TorusPoint step_inverse(const TorusPoint& r) const {
    double x = lin_.d * r.x - lin_.b * r.p;
    double p = -lin_.c * r.x + lin_.a * r.p;
    x = wrap01(x);
    if (perturbed_) p -= eps_ * kick_.d_dx(x, 0.0);
    return {x, p};
  }

  /// Jacobian of one forward step at r.
  Eigen::Matrix2d jacobian(const TorusPoint& r) const {
    Eigen::Matrix2d m = lin_.matrix();
    if (!perturbed_) return m;
    Eigen::Matrix2d k;
    k << 1.0, 0.0, eps_ * kick_.d2_dx2(r.x, 0.0), 1.0;
    return m * k;
  }

private:
  TorusMap() = default;
  LinearMap lin_;
  double eps_ = 0.0;
  Observable kick_;
  bool perturbed_ = false;
};

inline TorusPoint evolve(const TorusMap& map, TorusPoint rho, long n) {
  if (n >= 0)
    for (long k = 0; k < n; ++k) rho = map.step(rho);
  else
    for (long k = 0; k < -n; ++k) rho = map.step_inverse(rho);
  return rho;
}

/// Unit unstable direction at rho. Linear maps use the exact eigenvector; otherwise two
/// tangent vectors are pushed along the backward orbit until they align.
inline Eigen::Vector2d unstable_direction(const TorusMap& map, const TorusPoint& rho,
                                          const TangentOptions& opt = {}) {
  if (map.is_linear()) return map.linear_part().unstable_direction();
  std::vector<TorusPoint> past(opt.iteration_cap + 1);
  past[0] = rho;
  for (int k = 1; k <= opt.iteration_cap; ++k) past[k] = map.step_inverse(past[k - 1]);
  Eigen::Vector2d u(1.0, 0.0), v(0.0, 1.0);
  for (int k = opt.iteration_cap; k >= 1; --k) {
    Eigen::Matrix2d jac = map.jacobian(past[k]);
    u = (jac * u).normalized();
    v = (jac * v).normalized();
  }
  if (std::fabs(u(0) * v(1) - u(1) * v(0)) < opt.tolerance) {
    if (u(0) < 0) u = -u;
    return u;
  }
  throw Error("unstable direction power iteration did not converge within " +
              std::to_string(opt.iteration_cap) + " steps");
}

struct TangentData {
  double J_plus = 1.0;
  double phi_plus_at_rho = 0.0;
};

inline TangentData tangent_data(const TorusMap& map, const TorusPoint& rho, int n, const TangentOptions& opt = {}) {
  if (n < 1) throw Error("tangent_data: n must be positive");
  if (map.is_linear()) {
    double lam = map.linear_part().lambda();
    return {std::pow(lam, n), std::log(lam)};
  }
  Eigen::Vector2d v = unstable_direction(map, rho, opt);
  TorusPoint r = rho;
  double logJ = 0.0, first = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::Vector2d w = map.jacobian(r) * v;
    double s = std::log(w.norm());
    if (k == 0) first = s;
    logJ += s;
    v = w.normalized();
    r = map.step(r);
  }
  return {std::exp(logJ), first};
}

/// One-step log stretch of the unstable direction.
inline double phi_plus(const TorusMap& map, const TorusPoint& rho, const TangentOptions& opt = {}) {
  return tangent_data(map, rho, 1, opt).phi_plus_at_rho;
}

struct HyperbolicityData {
  double lambda_max = 0.0;
  double nu_min = 0.0;
  std::function<double(const TorusPoint&)> phi_plus;
  std::function<Eigen::Vector2d(const TorusPoint&)> unstable_dir;
};

/// Expansion rates. Linear maps are exact; perturbed maps are sampled on a g x g grid over t steps.
inline HyperbolicityData hyperbolicity_data(const TorusMap& map, int grid = 16, int t = 24,
                                            const TangentOptions& opt = {}) {
  HyperbolicityData h;
  h.phi_plus = [map, opt](const TorusPoint& r) { return phi_plus(map, r, opt); };
  h.unstable_dir = [map, opt](const TorusPoint& r) { return unstable_direction(map, r, opt); };
  if (map.is_linear()) {
    h.lambda_max = h.nu_min = std::log(map.linear_part().lambda());
    return h;
  }
  double lmax = -std::numeric_limits<double>::infinity();
  double nmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      TorusPoint r((i + 0.5) / grid, (j + 0.5) / grid);
      Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
      double lognorm = 0.0;
      TorusPoint s = r;
      for (int k = 0; k < t; ++k) {
        acc = map.jacobian(s) * acc;
        double nrm = acc.norm();
        acc /= nrm;
        lognorm += std::log(nrm);
        s = map.step(s);
      }
      Eigen::JacobiSVD<Eigen::Matrix2d> sv(acc);
      lmax = std::max(lmax, (lognorm + std::log(sv.singularValues()(0))) / t);
      nmin = std::min(nmin, std::log(tangent_data(map, r, t, opt).J_plus) / t);
    }
  h.lambda_max = lmax;
  h.nu_min = nmin;
  return h;
}

} // namespace dampedlab::classical

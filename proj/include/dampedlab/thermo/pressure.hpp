#pragma once

#include "dampedlab/classical.hpp"

#include <sstream>

namespace dampedlab::thermo {

using classical::Observable;
using classical::PeriodicOrbit;
using classical::TorusMap;

/// f = q + phi_coeff * phi_plus.
struct Potential {
  Observable q;
  double phi_coeff = 0.0;

  std::string describe() const {
    std::ostringstream os;
    os << "q[" << q.coefficients().size() << " modes, mean " << q.mean() << "]";
    if (phi_coeff != 0.0) os << (phi_coeff > 0 ? " + " : " - ") << std::fabs(phi_coeff) << "*phi_plus";
    return os.str();
  }
};

struct PressureEstimate {
  std::string f_desc;
  int n_min = 0, n_max = 0;
  std::vector<std::pair<int, double>> partial;
  double value = 0.0;
  double error_est = 0.0;
};

inline double log_sum_exp(const std::vector<double>& terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

/// Orbit average of phi_plus: (1/p) log of the unstable eigenvalue of the orbit's tangent product.
inline double orbit_phi_average(const TorusMap& map, const PeriodicOrbit& orb) {
  if (map.is_linear()) return std::log(map.linear_part().lambda());
  Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
  double logscale = 0.0;
  for (const auto& r : orb.points) {
    acc = map.jacobian(r) * acc;
    double s = acc.norm();
    acc /= s;
    logscale += std::log(s);
  }
  Eigen::EigenSolver<Eigen::Matrix2d> es(acc);
  double mx = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1)));
  return (logscale + std::log(mx)) / orb.period;
}

/// Per-orbit Birkhoff sums of q over Fix(M^n), n in [n_min, n_max]. Every point of an orbit of
/// period p carries the same n-step sum (n/p) * (orbit sum), so each orbit enters with weight p.
class OrbitSums {
public:
  OrbitSums(const TorusMap& map, const Observable& q, int n_min = 6, int n_max = 14,
            int cap = classical::kDefaultOrbitCap)
      : n_min_(n_min), n_max_(n_max), q_(q) {
    if (!map.is_linear()) throw Error("pressure: orbit sums need a linear map");
    if (n_min < 1 || n_max < n_min) throw Error("pressure: invalid n range");
    if (n_max > cap) throw Error("pressure: n_max = " + std::to_string(n_max) + " exceeds the orbit overflow cap " +
                                 std::to_string(cap));
    log_lambda_ = std::log(map.linear_part().lambda());
    for (int n = n_min; n <= n_max; ++n) {
      Level lev;
      for (const auto& o : classical::periodic_orbits(map, n, cap)) {
        lev.weight.push_back(double(o.period));
        lev.sq.push_back(double(n / o.period) * o.average(q) * o.period);
      }
      levels_.push_back(std::move(lev));
    }
  }

  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }
  const Observable& observable() const { return q_; }

  /// (1/n) log sum over Fix(M^n) of exp(beta*S_n q + phi_coeff*S_n phi_plus) + c.
  double partial(int n, double beta, double phi_coeff, double c = 0.0) const {
    const Level& lev = levels_.at(std::size_t(n - n_min_));
    std::vector<double> t(lev.sq.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::log(lev.weight[i]) + beta * lev.sq[i];
    return (log_sum_exp(t) + phi_coeff * n * log_lambda_) / n + c;
  }

  /// Extrapolation step: partials are compared at n and n - L with L = 6 when the range allows, so
  /// both indices agree mod 2 and mod 3 and short orbits contribute alike to both sums.
  int richardson_step() const { return n_max_ - n_min_ >= 6 ? 6 : 1; }

  /// (n p_n - m p_m)/(n - m) at n = n_max, m = n - L; removes the log(prefactor)/n term.
  double value(double beta, double phi_coeff, double c = 0.0) const {
    if (n_max_ == n_min_) return partial(n_max_, beta, phi_coeff, c);
    return richardson(n_max_, beta, phi_coeff) + c;
  }

  PressureEstimate estimate(double beta, double phi_coeff, double c = 0.0) const {
    PressureEstimate e;
    e.f_desc = Potential{beta * q_ + c, phi_coeff}.describe();
    e.n_min = n_min_;
    e.n_max = n_max_;
    for (int n = n_min_; n <= n_max_; ++n) e.partial.emplace_back(n, partial(n, beta, phi_coeff, c));
    if (n_max_ == n_min_) {
      e.value = e.partial.back().second;
      e.error_est = 0.0;
      return e;
    }
    e.value = richardson(n_max_, beta, phi_coeff) + c;
    double inc = n_max_ - 1 - richardson_step() >= n_min_
                     ? std::fabs(e.value - c - richardson(n_max_ - 1, beta, phi_coeff))
                     : 0.0;
    e.error_est = std::max(inc, std::fabs(e.value - e.partial.back().second));
    return e;
  }

  double log_lambda() const { return log_lambda_; }

private:
  double richardson(int n, double beta, double phi_coeff) const {
    int m = n - richardson_step();
    return (n * partial(n, beta, phi_coeff) - m * partial(m, beta, phi_coeff)) / (n - m);
  }

  struct Level {
    std::vector<double> weight;
    std::vector<double> sq;
  };
  int n_min_, n_max_;
  Observable q_;
  double log_lambda_ = 0.0;
  std::vector<Level> levels_;
};

inline PressureEstimate pressure(const TorusMap& map, const Potential& f, int n_min = 6, int n_max = 14) {
  OrbitSums sums(map, f.q, n_min, n_max);
  PressureEstimate e = sums.estimate(1.0, f.phi_coeff);
  e.f_desc = f.describe();
  return e;
}

/// Max over the orbits of the orbit average of f; exact for a finite union of closed orbits.
inline double pressure_on_orbit_set(const TorusMap& map, const std::vector<PeriodicOrbit>& orbits,
                                    const Potential& f) {
  if (orbits.empty()) throw Error("pressure_on_orbit_set: empty orbit set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : orbits) {
    if (o.period < 1 || int(o.points.size()) != o.period) throw Error("pressure_on_orbit_set: malformed orbit");
    double v = o.average(f.q);
    if (f.phi_coeff != 0.0) v += f.phi_coeff * orbit_phi_average(map, o);
    best = std::max(best, v);
  }
  return best;
}

} // namespace dampedlab::thermo

#pragma once

#include "dampedlab/classical/observable.hpp"

#include <unsupported/Eigen/FFT>

#include <functional>
#include <map>

namespace dampedlab::wave {

using classical::Observable;

/// Damping a(x) >= 0 on the circle (x in [0,1), length 2 pi) or on the 2-torus with no y dependence.
/// coeffs[m + M] is the Fourier coefficient of e^{2 pi i m x}, |m| <= M.
struct DampingProfile {
  int dim = 1;
  std::function<double(double)> fn;
  std::vector<cplx> coeffs;
  int M = 0;
  double a_min = 0.0;
  double a_max = 0.0;
  double mean = 0.0;
  std::string description;

  double operator()(double x) const { return fn(wrap01(x)); }
  cplx coeff(int m) const { return std::abs(m) > M ? cplx(0.0) : coeffs[std::size_t(m + M)]; }
  /// Largest |m| with |a_m| above tol * a_max.
  int bandwidth(double tol = 1e-12) const {
    for (int m = M; m > 0; --m)
      if (std::abs(coeff(m)) > tol * std::max(a_max, 1e-300)) return m;
    return 0;
  }
  bool is_constant() const { return a_max - a_min <= 1e-14 * std::max(1.0, a_max); }

  static DampingProfile from_observable(const Observable& q, int dim = 1);
  static DampingProfile constant(double c, int dim = 1) { return from_observable(Observable::constant(c), dim); }
  /// amp * exp(1 - 1/(1 - s^2)), s = (x - center)/half_width, zero for |s| >= 1 (periodized).
  static DampingProfile bump(double center, double half_width, double amp, int dim = 1);
  /// Any smooth nonnegative function; coefficients by FFT on a fine grid.
  static DampingProfile from_function(std::function<double(double)> f, int dim, std::string desc, int M = 1024);
};

namespace detail {
inline void finish_profile(DampingProfile& p, int check_grid = 8192) {
  if (p.dim != 1 && p.dim != 2) throw Error("DampingProfile: dim must be 1 or 2");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  for (int j = 0; j < check_grid; ++j) {
    double v = p.fn(double(j) / check_grid);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  if (lo < -1e-12) throw Error("DampingProfile: a takes negative value " + std::to_string(lo));
  if (hi <= 0.0) throw Error("DampingProfile: damping vanishes identically");
  p.a_min = std::max(lo, 0.0);
  p.a_max = hi;
  p.mean = p.coeffs.empty() ? sum / check_grid : p.coeff(0).real();
}
} // namespace detail

inline DampingProfile DampingProfile::from_observable(const Observable& q, int dim) {
  if (q.depends_on_momentum()) throw Error("DampingProfile: a must depend on x only");
  DampingProfile p;
  p.dim = dim;
  p.fn = [q](double x) { return q(x, 0.0); };
  p.M = q.bandwidth();
  p.coeffs.assign(std::size_t(2 * p.M + 1), cplx(0.0));
  for (int m = -p.M; m <= p.M; ++m) p.coeffs[std::size_t(m + p.M)] = q.coefficient(m, 0);
  p.description = "trigonometric polynomial of degree " + std::to_string(p.M);
  detail::finish_profile(p);
  return p;
}

inline DampingProfile DampingProfile::from_function(std::function<double(double)> f, int dim, std::string desc, int M) {
  DampingProfile p;
  p.dim = dim;
  p.fn = std::move(f);
  p.description = std::move(desc);
  const int G = 16 * M;
  std::vector<double> samples(G);
  for (int j = 0; j < G; ++j) samples[j] = p.fn(double(j) / G);
  Eigen::FFT<double> fft;
  std::vector<cplx> spec;
  fft.fwd(spec, samples);  // spec[m] = sum_j f_j e^{-2 pi i j m / G}
  p.M = M;
  p.coeffs.assign(std::size_t(2 * M + 1), cplx(0.0));
  for (int m = -M; m <= M; ++m) {
    cplx c = spec[std::size_t((m % G + G) % G)] / double(G);
    p.coeffs[std::size_t(m + M)] = c;
  }
  p.coeffs[std::size_t(M)] = p.coeffs[std::size_t(M)].real();
  for (int m = 1; m <= M; ++m) p.coeffs[std::size_t(M - m)] = std::conj(p.coeffs[std::size_t(M + m)]);
  detail::finish_profile(p);
  return p;
}

inline DampingProfile DampingProfile::bump(double center, double half_width, double amp, int dim) {
  if (!(half_width > 0.0 && half_width <= 0.5) || !(amp > 0.0)) throw Error("DampingProfile::bump: bad parameters");
  auto f = [=](double x) {
    double s = (x - center) - std::round(x - center);
    s /= half_width;
    if (std::fabs(s) >= 1.0) return 0.0;
    return amp * std::exp(1.0 - 1.0 / (1.0 - s * s));
  };
  return from_function(f, dim,
                       "bump centre " + std::to_string(center) + " half-width " + std::to_string(half_width));
}

} // namespace dampedlab::wave

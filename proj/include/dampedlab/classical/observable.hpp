#pragma once

#include "dampedlab/core.hpp"

#include <map>
#include <utility>

namespace dampedlab::classical {

using Frequency = std::pair<int, int>;

/// Real trigonometric polynomial q(x,p) = sum_k c_k exp(2 pi i (k1 x + k2 p)).
/// Coefficients are kept Hermitian, c(-k) = conj(c(k)), so values are real.
class Observable {
public:
  Observable() = default;

  static Observable constant(double c) {
    Observable o;
    o.set_mode(0, 0, c);
    return o;
  }

  /// amp * cos(2 pi (k1 x + k2 p) + phase)
  static Observable cosine(int k1, int k2, double amp = 1.0, double phase = 0.0) {
    Observable o;
    if (k1 == 0 && k2 == 0) {
      o.set_mode(0, 0, amp * std::cos(phase));
      return o;
    }
    o.set_mode(k1, k2, 0.5 * amp * std::polar(1.0, phase));
    return o;
  }

  /// Validating constructor; the caller supplies both halves of every pair.
  static Observable from_coefficients(const std::map<Frequency, cplx>& c, double tol = 1e-12) {
    Observable o;
    for (const auto& [k, v] : c) {
      auto it = c.find({-k.first, -k.second});
      cplx partner = it == c.end() ? cplx(0.0) : it->second;
      if (std::abs(v - std::conj(partner)) > tol * std::max(1.0, std::abs(v)))
        throw Error("Observable: coefficients at (" + std::to_string(k.first) + "," +
                    std::to_string(k.second) + ") and its negative are not conjugate");
    }
    for (const auto& [k, v] : c)
      if (v != cplx(0.0)) o.coeffs_[k] = v;
    if (auto it = o.coeffs_.find({0, 0}); it != o.coeffs_.end()) it->second = it->second.real();
    return o;
  }

  /// Sets c(k) and its conjugate partner. At k = 0 only the real part is kept.
  Observable& set_mode(int k1, int k2, cplx c) {
    if (k1 == 0 && k2 == 0) {
      assign({0, 0}, c.real());
    } else {
      assign({k1, k2}, c);
      assign({-k1, -k2}, std::conj(c));
    }
    return *this;
  }

  const std::map<Frequency, cplx>& coefficients() const { return coeffs_; }

  cplx coefficient(int k1, int k2) const {
    auto it = coeffs_.find({k1, k2});
    return it == coeffs_.end() ? cplx(0.0) : it->second;
  }

  double mean() const { return coefficient(0, 0).real(); }

  double operator()(double x, double p) const {
    double v = 0.0;
    for (const auto& [k, c] : coeffs_) {
      double ph = kTwoPi * (k.first * x + k.second * p);
      v += c.real() * std::cos(ph) - c.imag() * std::sin(ph);
    }
    return v;
  }

  /// Partial derivatives in x and p.
  double d_dx(double x, double p) const { return derivative(x, p, 1, 0); }
  double d_dp(double x, double p) const { return derivative(x, p, 0, 1); }
  double d2_dx2(double x, double p) const { return derivative(x, p, 2, 0); }

  bool depends_on_momentum() const {
    for (const auto& [k, c] : coeffs_)
      if (k.second != 0) return true;
    return false;
  }
  bool depends_on_position() const {
    for (const auto& [k, c] : coeffs_)
      if (k.first != 0) return true;
    return false;
  }
  bool is_constant() const { return !depends_on_momentum() && !depends_on_position(); }

  int bandwidth() const {
    int b = 0;
    for (const auto& [k, c] : coeffs_) b = std::max({b, std::abs(k.first), std::abs(k.second)});
    return b;
  }

  /// Sum of |c_k|, an upper bound for sup |q - mean|.
  double l1_norm() const {
    double s = 0;
    for (const auto& [k, c] : coeffs_) s += std::abs(c);
    return s;
  }

  Observable& operator+=(const Observable& o) {
    for (const auto& [k, c] : o.coeffs_) assign(k, coefficient(k.first, k.second) + c);
    return *this;
  }
  Observable& operator*=(double s) {
    for (auto& [k, c] : coeffs_) c *= s;
    if (s == 0.0) coeffs_.clear();
    return *this;
  }
  Observable& operator+=(double c) {
    assign({0, 0}, mean() + c);
    return *this;
  }
  friend Observable operator+(Observable a, const Observable& b) { return a += b; }
  friend Observable operator*(double s, Observable a) { return a *= s; }
  friend Observable operator+(Observable a, double c) { return a += c; }
  friend Observable operator-(Observable a, double c) { return a += -c; }

  /// Extrema sampled on a g x g lattice.
  std::pair<double, double> sampled_range(int g = 256) const {
    if (g < 1) throw Error("sampled_range: empty grid");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        double v = (*this)(double(i) / g, double(j) / g);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    return {lo, hi};
  }

  friend bool operator==(const Observable&, const Observable&) = default;

private:
  void assign(const Frequency& k, cplx c) {
    if (c == cplx(0.0))
      coeffs_.erase(k);
    else
      coeffs_[k] = c;
  }

  double derivative(double x, double p, int ox, int op) const {
    double v = 0.0;
    for (const auto& [k, c] : coeffs_) {
      double ph = kTwoPi * (k.first * x + k.second * p);
      cplx factor = 1.0;
      for (int i = 0; i < ox; ++i) factor *= kI * kTwoPi * double(k.first);
      for (int i = 0; i < op; ++i) factor *= kI * kTwoPi * double(k.second);
      v += (c * factor * std::polar(1.0, ph)).real();
    }
    return v;
  }

  std::map<Frequency, cplx> coeffs_;
};

} // namespace dampedlab::classical

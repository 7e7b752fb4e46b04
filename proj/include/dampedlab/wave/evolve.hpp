#pragma once

#include "dampedlab/wave/generator.hpp"

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace dampedlab::wave {

/// Cauchy data in the Galerkin basis, blocks concatenated: u and du/dt.
struct WaveData {
  CVector u;
  CVector ut;
};

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> energies;
  double data_regularity = 0.0;
  std::string method;  // "eigen" or "integrator"
  std::string note;
};

enum class EvolveMethod { automatic, eigen, integrator };

/// E = (1/2) sum (|k|^2 |u_k|^2 + |u_t,k|^2)
inline double energy(const WaveGenerator& g, const WaveData& d) {
  double e = 0.0;
  Eigen::Index off = 0;
  for (const auto& b : g.blocks) {
    for (int i = 0; i < b.size(); ++i) e += b.ksq(i) * std::norm(d.u(off + i)) + std::norm(d.ut(off + i));
    off += b.size();
  }
  return 0.5 * e;
}

/// Random data with Sobolev weight s: u_k ~ <k>^{-1-s}, u_t,k ~ <k>^{-s}.
inline WaveData sobolev_data(const WaveGenerator& g, double s, std::uint64_t seed) {
  CounterRng rng(seed, 17);
  WaveData d{CVector(g.mode_count()), CVector(g.mode_count())};
  std::uint64_t c = 0;
  Eigen::Index off = 0;
  for (const auto& b : g.blocks) {
    for (int i = 0; i < b.size(); ++i) {
      double w = std::pow(1.0 + b.ksq(i), -0.5 * s);
      double wu = w / std::sqrt(1.0 + b.ksq(i));
      d.u(off + i) = wu * cplx(rng.normal(c), rng.normal(c + 1));
      d.ut(off + i) = w * cplx(rng.normal(c + 2), rng.normal(c + 3));
      c += 4;
    }
    off += b.size();
  }
  return d;
}

namespace detail {

inline double condition_number(const CMatrix& r) {
  RVector s = linalg::singular_values(r);
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

using RealState = std::vector<double>;

/// dX/dt = -i A X integrated with adaptive Dormand-Prince; returns X at each time.
inline std::vector<CVector> integrate_block(const CMatrix& A, const CVector& x0, const std::vector<double>& times,
                                            double tol) {
  namespace ode = boost::numeric::odeint;
  const Eigen::Index n = x0.size();
  CMatrix mA = -kI * A;
  RealState x(2 * std::size_t(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    x[2 * i] = x0(i).real();
    x[2 * i + 1] = x0(i).imag();
  }
  auto rhs = [&](const RealState& s, RealState& ds, double) {
    CVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(s[2 * i], s[2 * i + 1]);
    CVector dz = mA * z;
    for (Eigen::Index i = 0; i < n; ++i) {
      ds[2 * i] = dz(i).real();
      ds[2 * i + 1] = dz(i).imag();
    }
  };
  std::vector<CVector> out;
  auto obs = [&](const RealState& s, double) {
    CVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(s[2 * i], s[2 * i + 1]);
    out.push_back(z);
  };
  auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<RealState>());
  ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3, obs);
  return out;
}

} // namespace detail

/// Energy along e^{-itA}(u, i u_t). Eigen-expansion by default; a defective (ill-conditioned)
/// eigenbasis switches to the integrator and is noted in the trace.
inline EnergyTrace evolve(const WaveGenerator& g, const WaveData& d, const std::vector<double>& times,
                          EvolveMethod method = EvolveMethod::automatic, double data_regularity = 0.0,
                          double integrator_tol = 1e-11) {
  if (d.u.size() != g.mode_count() || d.ut.size() != g.mode_count())
    throw Error("evolve: data size does not match the truncation");
  if (!std::is_sorted(times.begin(), times.end())) throw Error("evolve: times must be sorted");
  EnergyTrace tr;
  tr.times = times;
  tr.energies.assign(times.size(), 0.0);
  tr.data_regularity = data_regularity;
  bool used_integrator = false;
  Eigen::Index off = 0;
  for (const auto& b : g.blocks) {
    const int m = b.size();
    CVector x0(2 * m);
    x0.head(m) = d.u.segment(off, m);
    x0.tail(m) = kI * d.ut.segment(off, m);
    auto add_energy = [&](std::size_t ti, const CVector& x) {
      double e = 0.0;
      for (int i = 0; i < m; ++i) e += b.ksq(i) * std::norm(x(i)) + std::norm(x(m + i));
      tr.energies[ti] += 0.5 * e;
    };
    bool integrate = method == EvolveMethod::integrator;
    if (!integrate) {
      auto e = linalg::eig(b.A, true);
      double cond = detail::condition_number(e.vectors);
      if (cond > 1e10) {
        if (method == EvolveMethod::eigen) throw Error("evolve: defective eigenbasis (condition " + std::to_string(cond) + ")");
        integrate = true;
        tr.note = "defective eigenbasis in block k2=" + std::to_string(b.k2) + ", integrator used";
      } else {
        CVector c = e.vectors.partialPivLu().solve(x0);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
          CVector ph = (-kI * times[ti] * e.values.array()).exp().matrix();
          add_energy(ti, e.vectors * ph.cwiseProduct(c));
        }
      }
    }
    if (integrate) {
      used_integrator = true;
      auto xs = detail::integrate_block(b.A, x0, times, integrator_tol);
      for (std::size_t ti = 0; ti < times.size(); ++ti) add_energy(ti, xs[ti]);
    }
    off += m;
  }
  tr.method = used_integrator ? "integrator" : "eigen";
  return tr;
}

struct DecayFit {
  double gamma_fit = 0.0;
  double gamma_pred = 0.0;
  std::size_t first = 0, last = 0;  // fit window in the trace
};

/// gamma_fit = -(1/2) slope of log E over the trace after its first 20%, stopping at E/E(0) = 1e-14.
inline DecayFit decay_fit(const EnergyTrace& tr, double G, double a_minus) {
  if (tr.times.size() < 5) throw Error("decay_fit: trace too short");
  const double t0 = tr.times.front(), t1 = tr.times.back();
  const double floor = 1e-14 * tr.energies.front();
  DecayFit f;
  f.gamma_pred = std::min(G, a_minus);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    if (tr.times[i] < t0 + 0.2 * (t1 - t0)) continue;
    if (!(tr.energies[i] > floor)) break;
    if (x.empty()) f.first = i;
    f.last = i;
    x.push_back(tr.times[i]);
    y.push_back(std::log(tr.energies[i]));
  }
  if (x.size() < 3) throw Error("decay_fit: fewer than 3 points above the energy floor in the fit window");
  f.gamma_fit = -0.5 * ls_slope(x, y);
  return f;
}

/// G = inf of -Im tau over tau != 0.
inline double spectral_gap(const WaveSpectrum& s, double zero_tol = 1e-8) {
  double g = std::numeric_limits<double>::infinity();
  for (const cplx& t : s.taus)
    if (std::abs(t) > zero_tol) g = std::min(g, -t.imag());
  return g;
}

} // namespace dampedlab::wave

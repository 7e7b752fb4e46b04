#pragma once

#include "dampedlab/cli/config.hpp"
#include "dampedlab/cli/emit.hpp"
#include "dampedlab/dispersion.hpp"
#include "dampedlab/spectra.hpp"
#include "dampedlab/thermo.hpp"
#include "dampedlab/wave.hpp"

#include <chrono>
#include <exception>
#include <thread>

namespace dampedlab::cli {

inline constexpr const char* kToolVersion = "dampedlab-run 1.0.0";

struct StageTime {
  std::string name;
  double seconds = 0.0;
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct AssertionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<StageTime> stages;
  std::vector<OutputFile> outputs;  // sorted by path
  std::vector<AssertionResult> assertions;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.passed; });
  }
  int exit_status() const { return passed() ? 0 : 1; }

  Json json() const {
    Json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["stages"] = Json::array();
    for (const auto& s : stages) j["stages"].push_back({{"name", s.name}, {"wall_seconds", s.seconds}});
    j["outputs"] = Json::array();
    for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}});
    j["assertions"] = Json::array();
    for (const auto& a : assertions)
      j["assertions"].push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    j["exit_status"] = exit_status();
    return j;
  }
};

/// Module error tagged with the stage that raised it.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& msg) : Error("stage " + stage + ": " + msg), stage(std::move(stage)) {}
  std::string stage;
};

/// Runs f(i) for i in [0, n) on DAMPEDLAB_WORKERS threads. Results land in distinct slots; the first
/// exception in index order is rethrown.
template <class F>
void parallel_for(std::size_t n, F f, int workers = classical::default_workers()) {
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto job = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  workers = std::max(1, std::min<int>(workers, int(n)));
  if (workers == 1) {
    job();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(job);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

namespace detail {

class Context {
public:
  Context(const ExperimentConfig& c) : cfg(c), dir(c.output_dir) {
    std::filesystem::create_directories(dir);
    man.experiment = to_string(c.experiment);
    man.config_hash = sha256_hex(identity_text(c));
  }

  template <class F>
  auto stage(const std::string& name, F f) -> decltype(f()) {
    auto t0 = std::chrono::steady_clock::now();
    auto done = [&] {
      std::lock_guard lk(mu_);
      man.stages.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        done();
      } else {
        auto r = f();
        done();
        return r;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }

  void output(const std::string& rel, const std::string& content, bool gzip = false) {
    auto p = dir / rel;
    if (gzip)
      write_gzip(p, content);
    else
      write_text(p, content);
    std::lock_guard lk(mu_);
    man.outputs.push_back({rel, sha256_file(p)});
  }

  void check(const std::string& name, bool ok, const std::string& detail) {
    if (cfg.asserts(name)) man.assertions.push_back({name, ok, detail});
  }

  RunManifest finish() {
    std::sort(man.outputs.begin(), man.outputs.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    write_text(dir / "manifest.json", man.json().dump(2) + "\n");
    return man;
  }

  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  RunManifest man;

private:
  std::mutex mu_;
};

inline std::string ntag(const std::string& stem, int N, const std::string& ext) {
  return stem + "_N" + std::to_string(N) + ext;
}

inline void run_classical(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  auto asym = cx.stage("asymptotics", [&] { return classical::asymptotics(map, q, c.iparam("t_max")); });
  auto hyp = cx.stage("hyperbolicity", [&] { return classical::hyperbolicity_data(map); });

  double worst = 0.0;
  if (map.is_linear()) {
    CsvWriter w({"n", "points", "closed_form"});
    cx.stage("orbits", [&] {
      for (int n = 1; n <= c.iparam("orbit_period"); ++n) {
        double pts = double(classical::count_points(classical::periodic_orbits(map, n)));
        double cf = classical::fixed_point_count_closed_form(map.linear_part(), n);
        worst = std::max(worst, std::fabs(pts - cf));
        w.row(n, pts, cf);
      }
    });
    cx.output("orbits.csv", w.str());
  }
  const int t = c.iparam("t");
  const double alpha = c.param("alpha");
  double vol = cx.stage("deviation_volume", [&] {
    return classical::deviation_volume(map, q, t, alpha, std::int64_t(c.param("samples")), *c.seed);
  });

  Json j;
  j["q_minus"] = asym.q_minus;
  j["q_bar"] = asym.q_bar;
  j["q_plus"] = asym.q_plus;
  j["grid_min"] = asym.grid_min;
  j["grid_max"] = asym.grid_max;
  j["lambda_max"] = hyp.lambda_max;
  j["nu_min"] = hyp.nu_min;
  j["deviation"] = {{"t", t}, {"alpha", alpha}, {"samples", c.param("samples")}, {"volume", vol},
                    {"log_rate", jnum(vol > 0 ? std::log(vol) / t : -INFINITY)}};
  cx.output("classical.json", j.dump(2) + "\n");

  const bool ordered = asym.q_minus <= asym.q_bar + 1e-12 && asym.q_bar <= asym.q_plus + 1e-12;
  cx.check("ordering", ordered, "q_minus=" + fmt(asym.q_minus) + " q_bar=" + fmt(asym.q_bar) + " q_plus=" + fmt(asym.q_plus));
  if (map.is_linear()) cx.check("orbit_count", worst <= c.tol("orbit_count"), "max count defect " + fmt(worst));
}

inline void run_pressure(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  const int n_min = c.iparam("n_min"), n_max = c.iparam("n_max");
  auto p0 = cx.stage("pressure_zero", [&] { return thermo::pressure(map, {classical::Observable{}, 0.0}, n_min, n_max); });
  auto pu = cx.stage("pressure_unstable", [&] { return thermo::pressure(map, {classical::Observable{}, -1.0}, n_min, n_max); });
  auto pq = cx.stage("pressure_half", [&] { return thermo::pressure(map, {q, -0.5}, n_min, n_max); });
  auto asym = cx.stage("asymptotics", [&] { return classical::asymptotics(map, q, c.iparam("t_max")); });
  thermo::RateOptions opt;
  opt.n_min = n_min;
  opt.n_max = n_max;
  auto table = cx.stage("rate_function", [&] { return thermo::rate_function(map, q, asym, opt); });
  cx.output("rate_function.csv", rate_function_csv({&table}));

  const double h_bar = table.at(table.q_bar);
  Json j;
  j["P_zero"] = {{"value", p0.value}, {"error_est", p0.error_est}};
  j["P_minus_phi"] = {{"value", pu.value}, {"error_est", pu.error_est}};
  j["P_q_minus_half_phi"] = {{"value", pq.value}, {"error_est", pq.error_est}};
  j["q_minus"] = table.q_minus;
  j["q_bar"] = table.q_bar;
  j["q_plus"] = table.q_plus;
  j["H_at_q_bar"] = jnum(h_bar);
  j["concavity_warning"] = table.concavity_warning;
  cx.output("pressure.json", j.dump(2) + "\n");

  cx.check("pressure_unstable", std::fabs(pu.value) <= c.tol("pressure"), "P(-phi+) = " + fmt(pu.value));
  cx.check("rate_zero", std::fabs(h_bar) <= c.tol("rate_zero"), "H(q_bar) = " + fmt(h_bar));
}

inline std::vector<spectra::SpectrumRecord> map_spectra(Context& cx, const classical::TorusMap& map,
                                                        const classical::Observable& q) {
  const auto& Ns = cx.cfg.N_list;
  std::vector<spectra::SpectrumRecord> recs(Ns.size());
  cx.stage("spectra", [&] {
    parallel_for(Ns.size(), [&](std::size_t i) {
      auto dp = qtorus::damped_propagator(map, q, qtorus::HilbertGrid{Ns[i]});
      recs[i] = spectra::eigendecompose(dp);
      cx.output(ntag("spectrum", Ns[i], ".csv"), spectrum_csv({&recs[i]}));
    });
  });
  return recs;
}

inline void run_qmap_spectrum(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  auto asym = cx.stage("asymptotics", [&] { return classical::asymptotics(map, q, c.iparam("t_max")); });
  auto recs = map_spectra(cx, map, q);
  Json rows = Json::array();
  int violations = 0;
  for (const auto& r : recs) {
    auto b = spectra::band_check(r, asym.q_minus, asym.q_plus, c.tol("band_eps"));
    violations += b.violations;
    rows.push_back({{"N", r.dimension}, {"violations", b.violations}, {"max_rate", b.max_rate},
                    {"min_rate", b.min_rate}, {"residual", r.residual}, {"trace_defect", r.trace_defect}});
  }
  Json j{{"q_minus", asym.q_minus}, {"q_bar", asym.q_bar}, {"q_plus", asym.q_plus}, {"rows", rows}};
  cx.output("summary.json", j.dump(2) + "\n");
  cx.check("band", violations == 0, std::to_string(violations) + " decay rates outside the band");
}

inline void run_fractal_weyl(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  auto asym = cx.stage("asymptotics", [&] { return classical::asymptotics(map, q, c.iparam("t_max")); });
  auto table = cx.stage("rate_function", [&] { return thermo::rate_function(map, q, asym); });
  auto recs = map_spectra(cx, map, q);
  std::vector<const spectra::SpectrumRecord*> ptr;
  for (const auto& r : recs) ptr.push_back(&r);
  // level at the given fraction of the way from q_bar to q_plus
  const double alpha = table.q_bar + c.param("alpha_fraction") * (table.q_plus - table.q_bar);
  const double lam = classical::hyperbolicity_data(map).lambda_max;
  auto rep = cx.stage("regression", [&] { return spectra::fractal_weyl_regression(ptr, alpha, table.at(alpha), lam); });
  CsvWriter w({"N", "count"});
  for (auto [N, n] : rep.counts) w.row(N, n);
  cx.output("counts.csv", w.str());
  Json j{{"alpha", alpha}, {"H_alpha", jnum(table.at(alpha))}, {"slope", jnum(rep.slope)},
         {"slope_bound", jnum(rep.slope_bound)}};
  cx.output("summary.json", j.dump(2) + "\n");
  cx.check("slope", rep.slope <= rep.slope_bound + c.tol("slope_slack"),
           "slope " + fmt(rep.slope) + " vs bound " + fmt(rep.slope_bound));
}

inline std::string path_table(const dispersion::PathTree& t, double lambda) {
  CsvWriter w({"alpha", "norm", "b_alpha", "C_alpha"});
  const double scale = std::sqrt(double(t.N)) * std::pow(lambda, -0.5 * t.n);
  for (const auto& l : t.leaves) {
    std::string a;
    for (std::size_t i = 0; i < l.alpha.size(); ++i) a += (i ? "." : "") + std::to_string(int(l.alpha[i]));
    w.row(a, l.norm, l.b_alpha, l.norm / (scale * l.b_alpha));
  }
  return w.str();
}

inline void run_dispersion_paths(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  const int J = c.iparam("J"), n = c.iparam("n");
  dispersion::PathOptions opt;
  opt.prune = c.param("prune");
  const auto& Ns = c.N_list;
  std::vector<dispersion::PathBound> rows(Ns.size());
  std::vector<double> rem(Ns.size());
  cx.stage("paths", [&] {
    parallel_for(Ns.size(), [&](std::size_t i) {
      qtorus::HilbertGrid g{Ns[i]};
      auto dp = qtorus::damped_propagator(map, q, g);
      auto P = dispersion::build_partition(g, J, c.param("delta"));
      dispersion::PathTree tree;
      rows[i] = dispersion::path_bound_check(dp, P, n, c.param("eta"), opt, &tree);
      rem[i] = tree.remainder_norm;
      cx.output(ntag("paths", Ns[i], ".csv.gz"), path_table(tree, rows[i].lambda), true);
    });
  });
  auto ps = cx.stage("pressure_sum", [&] { return dispersion::pressure_sum_check(map, q, J, n); });

  CsvWriter w({"N", "paths", "max_norm", "fitted_C", "reconstruction_defect", "remainder_norm"});
  double cmin = INFINITY, cmax = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.row(r.N, r.paths, r.max_norm, r.fitted_C, r.reconstruction_defect, rem[i]);
    cmin = std::min(cmin, r.fitted_C);
    cmax = std::max(cmax, r.fitted_C);
    dmax = std::max(dmax, r.reconstruction_defect);
  }
  cx.output("summary.csv", w.str());
  Json j{{"J", J}, {"n", n}, {"C_ratio", jnum(cmax / cmin)}, {"pressure_sum", ps.lhs}, {"pressure", ps.rhs},
         {"pressure_difference", ps.difference()}, {"cylinders", ps.cylinders}};
  cx.output("summary.json", j.dump(2) + "\n");

  cx.check("reconstruction", dmax < c.tol("reconstruction"), "max defect " + fmt(dmax));
  cx.check("C_stable", cmin > 0 && cmax / cmin <= c.tol("C_ratio"), "C range [" + fmt(cmin) + ", " + fmt(cmax) + "]");
  cx.check("pressure_sum", std::fabs(ps.difference()) <= c.tol("pressure"),
           "sum rate " + fmt(ps.lhs) + " vs pressure " + fmt(ps.rhs));
}

/// beta(alpha) > 0 somewhere on the rate-function domain above q_bar.
inline void require_condition0(const thermo::RateFunctionTable& t, double lam, double nu, double alpha) {
  bool any = false;
  for (double s : t.s_grid)
    if (s > t.q_bar && thermo::beta_of_alpha(t, s, lam, nu) > 0) any = true;
  if (!any)
    throw Error("condition0 fails everywhere: beta(alpha) <= 0 on (q_bar, q_plus] = (" + fmt(t.q_bar) + ", " +
                fmt(t.q_plus) + "]");
  double b = thermo::beta_of_alpha(t, alpha, lam, nu);
  if (!(b > 0)) throw Error("condition0 fails at alpha_level " + fmt(alpha) + ": beta = " + fmt(b));
}

inline void run_dispersion_projector(Context& cx) {
  const auto& c = cx.cfg;
  auto map = c.map.build();
  auto q = c.damping.observable();
  auto hyp = classical::hyperbolicity_data(map);
  const double lam = hyp.lambda_max, nu = hyp.nu_min, alpha = c.param("alpha_level");
  auto asym = cx.stage("asymptotics", [&] { return classical::asymptotics(map, q, c.iparam("t_max")); });
  auto table = cx.stage("rate_function", [&] { return thermo::rate_function(map, q, asym); });
  cx.stage("condition0", [&] { require_condition0(table, lam, nu, alpha); });
  const double beta = thermo::beta_of_alpha(table, alpha, lam, nu);
  auto crit = cx.stage("critical_level", [&] { return dispersion::critical_level(table, table.q_plus, lam, nu); });
  const double gamma = 0.999 * crit.gamma_max;

  struct Row {
    int N = 0, T = 0, rank = 0;
    double vol = NAN, norm = 0, ident = NAN, measured = NAN, bound = NAN;
    bool split = false;
  };
  const auto& Ns = c.N_list;
  std::vector<Row> rows(Ns.size());
  cx.stage("projectors", [&] {
    parallel_for(Ns.size(), [&](std::size_t i) {
      Row& r = rows[i];
      r.N = Ns[i];
      qtorus::HilbertGrid g{r.N};
      auto dp = qtorus::damped_propagator(map, q, g);
      r.T = c.iparam("T") > 0 ? c.iparam("T") : dispersion::ehrenfest_time(r.N, c.param("eps"), lam).T;
      if (r.N <= c.iparam("split_cap")) {
        r.split = true;
        auto s = dispersion::projector_split(dp, r.T, alpha);
        auto id = dispersion::split_identities(s);
        r.ident = std::max({id.unitarity, id.polar, id.sigma_match, id.idempotent, id.selfadjoint, id.completeness,
                            id.commutator});
        r.rank = s.rank_plus;
        r.norm = dispersion::dispersion_norm(dp, s);
        r.vol = classical::deviation_volume(map, q, r.T, alpha, std::int64_t(c.param("samples")), *c.seed, true, 1);
        auto cert = dispersion::certify_gap(dp, r.T, table.q_plus, gamma);
        r.measured = cert.measured;
        r.bound = cert.bound;
      } else {
        auto p = dispersion::plus_part(dp, r.T, alpha);
        r.rank = p.rank_plus;
        r.norm = dispersion::dispersion_norm(dp, p);
      }
    });
  });

  CsvWriter w({"N", "T", "rank_plus", "rank_fraction", "deviation_volume", "dispersion_norm", "identities",
               "V2T_norm", "V2T_bound"});
  std::vector<double> lx, ly;
  double ident = 0.0, rank_dev = 0.0;
  bool certified = true, any_split = false;
  for (const auto& r : rows) {
    w.row(r.N, r.T, r.rank, double(r.rank) / r.N, r.vol, r.norm, r.ident, r.measured, r.bound);
    if (r.norm > 0) {
      lx.push_back(std::log(double(r.N)));
      ly.push_back(std::log(r.norm));
    }
    if (r.split) {
      any_split = true;
      ident = std::max(ident, r.ident);
      rank_dev = std::max(rank_dev, std::fabs(double(r.rank) / r.N - r.vol));
      certified = certified && r.measured <= r.bound;
    }
  }
  cx.output("projector.csv", w.str());
  const double expo = lx.size() >= 2 ? -ls_slope(lx, ly) : NAN;
  Json j{{"alpha_level", alpha}, {"beta", beta}, {"lambda_max", lam}, {"predicted_exponent", beta / lam},
         {"fitted_exponent", jnum(expo)}, {"alpha_c", crit.alpha_c}, {"gamma_max", crit.gamma_max},
         {"gamma", gamma}, {"q_plus", table.q_plus}};
  cx.output("summary.json", j.dump(2) + "\n");

  cx.check("identities", any_split && ident <= c.tol("identities"), "max identity defect " + fmt(ident));
  cx.check("rank_volume", any_split && rank_dev <= c.tol("rank_volume"), "max |rank/N - volume| " + fmt(rank_dev));
  cx.check("exponent", expo >= beta / lam - c.tol("exponent_slack"),
           "fitted " + fmt(expo) + " vs predicted " + fmt(beta / lam));
  cx.check("certified_gap", any_split && certified, "gamma " + fmt(gamma));
}

inline void run_dwe(Context& cx) {
  const auto& c = cx.cfg;
  const int dim = c.iparam("dim");
  auto a = c.damping.profile(dim);
  auto g = cx.stage("assemble", [&] { return wave::assemble_generator(a, c.iparam("K")); });
  auto s = cx.stage("spectrum", [&] { return wave::wave_spectrum(g, false); });
  auto rec = wave::wave_record(s);
  cx.output("spectrum.csv", spectrum_csv({&rec}));
  auto strip = wave::strip_check(s, a.a_min, a.a_max, c.tol("strip"));
  const double sym = wave::symmetry_defect(s);

  auto data = wave::sobolev_data(g, c.param("regularity"), *c.seed);
  auto times = thermo::linspace(0.0, c.param("t_max"), c.iparam("steps"));
  auto tr = cx.stage("evolve", [&] { return wave::evolve(g, data, times); });
  CsvWriter w({"t", "E"});
  for (std::size_t i = 0; i < tr.times.size(); ++i) w.row(tr.times[i], tr.energies[i]);
  cx.output("energy.csv", w.str());
  const double G = wave::spectral_gap(s);
  const double a_minus = wave::gcc_scan(a, 1.0 + c.param("t_max")).a_minus_estimate;
  auto fit = cx.stage("decay_fit", [&] { return wave::decay_fit(tr, G, a_minus); });
  Json j{{"dim", dim}, {"K", g.K}, {"a_min", a.a_min}, {"a_max", a.a_max}, {"gap", jnum(G)}, {"a_minus", a_minus},
         {"gamma_fit", jnum(fit.gamma_fit)}, {"gamma_pred", jnum(fit.gamma_pred)}, {"method", tr.method},
         {"strip_violations", strip.violations}, {"symmetry_defect", sym}};
  cx.output("summary.json", j.dump(2) + "\n");
  cx.check("strip", strip.violations == 0, std::to_string(strip.violations) + " modes outside the strip");
  cx.check("symmetry", sym <= c.tol("symmetry"), "symmetry defect " + fmt(sym));
}

} // namespace detail

/// Runs the experiment, writes its outputs and manifest.json under cfg.output_dir.
inline RunManifest run(const ExperimentConfig& cfg) {
  if (stochastic(cfg.experiment) && !cfg.seed) throw Error("run: missing seed");
  detail::Context cx(cfg);
  cx.output("config.json", identity_text(cfg));
  switch (cfg.experiment) {
  case Experiment::classical: detail::run_classical(cx); break;
  case Experiment::pressure: detail::run_pressure(cx); break;
  case Experiment::qmap_spectrum: detail::run_qmap_spectrum(cx); break;
  case Experiment::fractal_weyl: detail::run_fractal_weyl(cx); break;
  case Experiment::dispersion_paths: detail::run_dispersion_paths(cx); break;
  case Experiment::dispersion_projector: detail::run_dispersion_projector(cx); break;
  case Experiment::dwe: detail::run_dwe(cx); break;
  }
  return cx.finish();
}

} // namespace dampedlab::cli

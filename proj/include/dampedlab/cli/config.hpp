#pragma once

#include "dampedlab/classical.hpp"
#include "dampedlab/wave/profile.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <set>

namespace dampedlab::cli {

using Json = nlohmann::ordered_json;

enum class Experiment { classical, pressure, qmap_spectrum, fractal_weyl, dispersion_paths, dispersion_projector, dwe };

inline constexpr std::array<std::pair<Experiment, const char*>, 7> kExperimentNames{{
    {Experiment::classical, "classical"},
    {Experiment::pressure, "pressure"},
    {Experiment::qmap_spectrum, "qmap_spectrum"},
    {Experiment::fractal_weyl, "fractal_weyl"},
    {Experiment::dispersion_paths, "dispersion_paths"},
    {Experiment::dispersion_projector, "dispersion_projector"},
    {Experiment::dwe, "dwe"},
}};

inline std::string to_string(Experiment e) {
  for (const auto& [k, n] : kExperimentNames)
    if (k == e) return n;
  return "?";
}

inline std::optional<Experiment> experiment_from_string(const std::string& s) {
  for (const auto& [k, n] : kExperimentNames)
    if (s == n) return k;
  return std::nullopt;
}

/// Experiments that draw random numbers and therefore need a seed.
inline bool stochastic(Experiment e) {
  return e == Experiment::classical || e == Experiment::dispersion_projector || e == Experiment::dwe;
}

struct Mode {
  int k1 = 0, k2 = 0;
  double amp = 0.0, phase = 0.0;
  bool operator==(const Mode&) const = default;
};

struct MapSpec {
  long a = 2, b = 1, c = 1, d = 1;
  double eps = 0.0;        // kick strength; 0 gives the linear map
  std::vector<Mode> kick;  // x-only generator
  bool operator==(const MapSpec&) const = default;

  classical::TorusMap build() const {
    classical::LinearMap m{a, b, c, d};
    if (eps == 0.0 || kick.empty()) return classical::TorusMap::linear(m);
    classical::Observable g;
    for (const auto& k : kick) g = g + classical::Observable::cosine(k.k1, k.k2, k.amp, k.phase);
    return classical::TorusMap::perturbed(m, eps, g);
  }
};

struct Bump {
  double center = 0.5, half_width = 0.1, amp = 1.0;
  bool operator==(const Bump&) const = default;
};

/// constant + sum amp cos(2 pi (k1 x + k2 p) + phase), or a smooth bump for the wave experiment.
struct DampingSpec {
  double constant = 0.0;
  std::vector<Mode> modes;
  std::optional<Bump> bump;
  bool operator==(const DampingSpec&) const = default;

  classical::Observable observable() const {
    classical::Observable q = classical::Observable::constant(constant);
    for (const auto& m : modes) q = q + classical::Observable::cosine(m.k1, m.k2, m.amp, m.phase);
    return q;
  }
  wave::DampingProfile profile(int dim) const {
    if (bump) return wave::DampingProfile::bump(bump->center, bump->half_width, bump->amp, dim);
    return wave::DampingProfile::from_observable(observable(), dim);
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::qmap_spectrum;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  MapSpec map;
  DampingSpec damping;
  std::vector<int> N_list;
  std::map<std::string, double> params;      // experiment parameters, defaults filled
  std::map<std::string, double> tolerances;  // assertion tolerances, defaults filled
  std::vector<std::string> assertions;       // assertions to evaluate, default all
  bool operator==(const ExperimentConfig&) const = default;

  double param(const std::string& k) const { return params.at(k); }
  int iparam(const std::string& k) const { return int(std::lround(params.at(k))); }
  double tol(const std::string& k) const { return tolerances.at(k); }
  bool asserts(const std::string& name) const {
    return std::find(assertions.begin(), assertions.end(), name) != assertions.end();
  }
};

struct Schema {
  bool needs_N_list = false;
  std::vector<int> default_N;
  std::map<std::string, double> params;
  std::map<std::string, double> tolerances;
  std::vector<std::string> assertions;
};

/// Parameter defaults per experiment. A NaN default marks a required parameter.
inline const Schema& schema(Experiment e) {
  static const std::map<Experiment, Schema> table = [] {
    const double req = std::numeric_limits<double>::quiet_NaN();
    std::map<Experiment, Schema> t;
    t[Experiment::classical] = {false, {},
                                {{"t_max", 24}, {"t", 20}, {"samples", 100000}, {"alpha", 0.1}, {"orbit_period", 8}},
                                {{"orbit_count", 0.5}},
                                {"ordering", "orbit_count"}};
    t[Experiment::pressure] = {false, {}, {{"n_min", 6}, {"n_max", 14}, {"t_max", 24}},
                               {{"pressure", 1e-3}, {"rate_zero", 1e-3}},
                               {"pressure_unstable", "rate_zero"}};
    t[Experiment::qmap_spectrum] = {true, {64}, {{"t_max", 24}}, {{"band_eps", 0.1}}, {"band"}};
    t[Experiment::fractal_weyl] = {true, {256, 512, 1024, 2048}, {{"t_max", 24}, {"alpha_fraction", 0.3}},
                                   {{"slope_slack", 0.15}}, {"slope"}};
    t[Experiment::dispersion_paths] = {true, {512, 1024, 2048},
                                       {{"J", 16}, {"n", 8}, {"delta", 0.25}, {"eta", 0.3}, {"prune", 1e-2}},
                                       {{"reconstruction", 1e-8}, {"C_ratio", 4.0}, {"pressure", 0.05}},
                                       {"reconstruction", "C_stable", "pressure_sum"}};
    t[Experiment::dispersion_projector] = {
        true, {512, 1024},
        {{"alpha_level", req}, {"T", 0}, {"eps", 0.05}, {"t_max", 24}, {"split_cap", 1024}, {"samples", 100000}},
        {{"identities", 1e-8}, {"rank_volume", 0.1}, {"exponent_slack", 0.2}},
        {"identities", "rank_volume", "exponent", "certified_gap"}};
    t[Experiment::dwe] = {false, {}, {{"dim", 1}, {"K", 64}, {"t_max", 30}, {"steps", 301}, {"regularity", 1.0}},
                          {{"strip", 1e-6}, {"symmetry", 1e-8}},
                          {"strip", "symmetry"}};
    return t;
  }();
  return table.at(e);
}

class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> v) : Error(join(v)), violations(std::move(v)) {}
  std::vector<std::string> violations;

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& x : v) s += "\n  " + x;
    return s;
  }
};

namespace detail {

struct Checker {
  std::vector<std::string> errors;

  void unknown_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) errors.push_back("unknown key \"" + it.key() + "\" in " + where);
  }
  template <class T>
  bool get(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return false;
    try {
      out = j.at(key).get<T>();
      return true;
    } catch (const std::exception&) {
      errors.push_back(where + "." + key + ": wrong type");
      return false;
    }
  }
  bool object(const Json& j, const std::string& where) {
    if (j.is_object()) return true;
    errors.push_back(where + " must be an object");
    return false;
  }

  std::vector<Mode> modes(const Json& j, const std::string& where) {
    std::vector<Mode> out;
    if (!j.is_array()) {
      errors.push_back(where + " must be an array");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string w = where + "[" + std::to_string(i) + "]";
      if (!object(j[i], w)) continue;
      unknown_keys(j[i], {"k", "amp", "phase"}, w);
      Mode m;
      std::vector<int> k;
      if (!get(j[i], "k", k, w) || k.size() != 2)
        errors.push_back(w + ".k must be a pair of integers");
      else
        m.k1 = k[0], m.k2 = k[1];
      get(j[i], "amp", m.amp, w);
      get(j[i], "phase", m.phase, w);
      out.push_back(m);
    }
    return out;
  }
};

inline Json modes_json(const std::vector<Mode>& v) {
  Json a = Json::array();
  for (const auto& m : v) a.push_back({{"k", {m.k1, m.k2}}, {"amp", m.amp}, {"phase", m.phase}});
  return a;
}

} // namespace detail

/// Validates the whole document and reports every violation at once.
inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  detail::Checker ck;
  if (!ck.object(j, "config")) throw ConfigError(ck.errors);
  ck.unknown_keys(j, {"experiment", "seed", "output_dir", "map", "damping", "N_list", "params", "tolerances",
                      "assertions"},
                  "config");

  ExperimentConfig c;
  std::string name;
  if (!ck.get(j, "experiment", name, "config")) {
    ck.errors.push_back("missing key \"experiment\"");
    throw ConfigError(ck.errors);
  }
  auto ex = experiment_from_string(name);
  if (!ex) {
    ck.errors.push_back("unknown experiment \"" + name + "\"");
    throw ConfigError(ck.errors);
  }
  c.experiment = *ex;
  const Schema& sc = schema(c.experiment);

  if (j.contains("seed")) {
    std::int64_t s = 0;
    if (ck.get(j, "seed", s, "config")) {
      if (s < 0)
        ck.errors.push_back("seed must be non-negative");
      else
        c.seed = std::uint64_t(s);
    }
  } else if (stochastic(c.experiment)) {
    ck.errors.push_back("missing seed (mandatory for the " + name + " experiment)");
  }
  ck.get(j, "output_dir", c.output_dir, "config");

  if (j.contains("map") && ck.object(j["map"], "map")) {
    const Json& m = j["map"];
    ck.unknown_keys(m, {"matrix", "eps", "kick"}, "map");
    std::vector<long> abcd;
    if (ck.get(m, "matrix", abcd, "map")) {
      if (abcd.size() != 4)
        ck.errors.push_back("map.matrix must have 4 entries");
      else
        c.map.a = abcd[0], c.map.b = abcd[1], c.map.c = abcd[2], c.map.d = abcd[3];
    }
    ck.get(m, "eps", c.map.eps, "map");
    if (m.contains("kick")) c.map.kick = ck.modes(m["kick"], "map.kick");
  }
  if (j.contains("damping") && ck.object(j["damping"], "damping")) {
    const Json& d = j["damping"];
    ck.unknown_keys(d, {"constant", "modes", "bump"}, "damping");
    ck.get(d, "constant", c.damping.constant, "damping");
    if (d.contains("modes")) c.damping.modes = ck.modes(d["modes"], "damping.modes");
    if (d.contains("bump") && ck.object(d["bump"], "damping.bump")) {
      Bump b;
      ck.unknown_keys(d["bump"], {"center", "half_width", "amp"}, "damping.bump");
      ck.get(d["bump"], "center", b.center, "damping.bump");
      ck.get(d["bump"], "half_width", b.half_width, "damping.bump");
      ck.get(d["bump"], "amp", b.amp, "damping.bump");
      c.damping.bump = b;
    }
  }

  if (j.contains("N_list")) {
    if (!sc.needs_N_list) ck.errors.push_back("N_list is not used by the " + name + " experiment");
    if (ck.get(j, "N_list", c.N_list, "config")) {
      if (c.N_list.empty()) ck.errors.push_back("N_list must not be empty");
      for (int N : c.N_list)
        if (N <= 0) ck.errors.push_back("non-positive N " + std::to_string(N) + " in N_list");
    }
  } else if (sc.needs_N_list) {
    c.N_list = sc.default_N;
  }

  c.params = sc.params;
  if (j.contains("params") && ck.object(j["params"], "params")) {
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
      if (!sc.params.count(it.key())) {
        ck.errors.push_back("unknown key \"" + it.key() + "\" in params of " + name);
        continue;
      }
      if (!it.value().is_number()) {
        ck.errors.push_back("params." + it.key() + " must be a number");
        continue;
      }
      c.params[it.key()] = it.value().get<double>();
    }
  }
  for (const auto& [k, v] : c.params)
    if (std::isnan(v)) ck.errors.push_back("missing required parameter params." + k);

  c.tolerances = sc.tolerances;
  if (j.contains("tolerances") && ck.object(j["tolerances"], "tolerances")) {
    for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
      if (!sc.tolerances.count(it.key())) {
        ck.errors.push_back("unknown key \"" + it.key() + "\" in tolerances of " + name);
        continue;
      }
      if (!it.value().is_number() || it.value().get<double>() < 0) {
        ck.errors.push_back("tolerances." + it.key() + " must be a non-negative number");
        continue;
      }
      c.tolerances[it.key()] = it.value().get<double>();
    }
  }

  if (j.contains("assertions")) {
    if (ck.get(j, "assertions", c.assertions, "config"))
      for (const auto& a : c.assertions)
        if (std::find(sc.assertions.begin(), sc.assertions.end(), a) == sc.assertions.end())
          ck.errors.push_back("unknown assertion \"" + a + "\" for " + name);
  } else {
    c.assertions = sc.assertions;
  }

  if (!ck.errors.empty()) throw ConfigError(ck.errors);
  return c;
}

inline Json config_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = to_string(c.experiment);
  if (c.seed) j["seed"] = *c.seed;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["map"] = {{"matrix", {c.map.a, c.map.b, c.map.c, c.map.d}}, {"eps", c.map.eps},
              {"kick", detail::modes_json(c.map.kick)}};
  j["damping"] = {{"constant", c.damping.constant}, {"modes", detail::modes_json(c.damping.modes)}};
  if (c.damping.bump)
    j["damping"]["bump"] = {{"center", c.damping.bump->center}, {"half_width", c.damping.bump->half_width},
                            {"amp", c.damping.bump->amp}};
  if (schema(c.experiment).needs_N_list) j["N_list"] = c.N_list;
  j["params"] = Json::object();
  for (const auto& [k, v] : c.params) j["params"][k] = v;
  j["tolerances"] = Json::object();
  for (const auto& [k, v] : c.tolerances) j["tolerances"][k] = v;
  j["assertions"] = c.assertions;
  return j;
}

/// Canonical text: fixed key order, defaults filled.
inline std::string serialize_config(const ExperimentConfig& c) { return config_json(c).dump(2) + "\n"; }

/// The config without its output location: what a run's outputs depend on.
inline std::string identity_text(const ExperimentConfig& c) {
  ExperimentConfig k = c;
  k.output_dir.clear();
  return serialize_config(k);
}

} // namespace dampedlab::cli

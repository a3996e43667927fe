#pragma once
//
// Run configuration: a JSON document resolved as
//   builtin defaults  <-  config file  <-  command-line overrides
// and validated against a fixed schema before anything is computed.
// Unknown keys are errors reported with their dotted path.
//

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fht/dynamics.hpp"
#include "fht/ensemble.hpp"
#include "fht/error.hpp"
#include "fht/io.hpp"
#include "fht/models.hpp"
#include "fht/observables.hpp"

namespace fht::config {

using nlohmann::json;

inline const std::vector<std::string>& builtin_models() {
  static const std::vector<std::string> names{"spin-measurement", "two-qubit", "custom"};
  return names;
}

inline const std::vector<std::string>& init_presets() {
  static const std::vector<std::string> names{
      "paper-fig1", "sx+", "sx-", "sz+", "sz-", "bell", "two-qubit-entangled", "up-up"};
  return names;
}

/// Allowed keys and their JSON types.
inline const json& schema() {
  static const json s = json::parse(R"({
    "model": {
      "builtin": "string",
      "params": {
        "omega_q": "number", "mass": "number", "omega_cl": "number",
        "mu": "number", "noise_amplitude": "number", "c_coupling": "number",
        "hughston_mu": "number"
      },
      "custom": {
        "dim": "integer", "h_q": "any", "observables": "array",
        "delta_min": "number|string",
        "classical": {"mass": "number", "omega_cl": "number"},
        "coupling": {"q": "number", "p": "number"}
      }
    },
    "mode": "string",
    "init": {
      "preset": "string|null", "amplitudes": "array|null",
      "coords": "array|null", "q": "number", "p": "number"
    },
    "integration": {"dt": "number", "t_final": "number", "sample_stride": "integer"},
    "ensemble": {"n_paths": "integer", "master_seed": "integer|null", "workers": "integer"},
    "detector": {"gamma_threshold": "number", "dwell_samples": "integer"},
    "output": {
      "trajectory": "string|null", "summary": "string|null",
      "records_dir": "string|null", "delimiter": "string", "track": "array"
    }
  })");
  return s;
}

namespace detail {

inline bool type_matches(const json& v, const std::string& spec) {
  std::istringstream in(spec);
  std::string t;
  while (std::getline(in, t, '|')) {
    if (t == "any") return true;
    if (t == "string" && v.is_string()) return true;
    if (t == "number" && v.is_number()) return true;
    if (t == "integer" && v.is_number_integer()) return true;
    if (t == "array" && v.is_array()) return true;
    if (t == "null" && v.is_null()) return true;
  }
  return false;
}

inline void check_against(const json& cfg, const json& sch, const std::string& prefix) {
  if (!cfg.is_object()) throw ConfigError("expected an object", prefix.empty() ? "<root>" : prefix);
  for (const auto& [key, value] : cfg.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!sch.contains(key)) throw ConfigError("unknown key", path);
    const json& rule = sch.at(key);
    if (rule.is_object()) {
      check_against(value, rule, path);
    } else if (!type_matches(value, rule.get<std::string>())) {
      throw ConfigError("expected " + rule.get<std::string>() + ", got " +
                            std::string(value.type_name()),
                        path);
    }
  }
}

inline int default_workers() {
  if (const char* env = std::getenv("FHT_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw ConfigError("FHT_WORKERS must be a positive integer", "ensemble.workers");
  }
  return 1;
}

}  // namespace detail

/// Recursively overlays `overlay` on `base` (objects merge, everything else
/// replaces).
inline void deep_merge(json& base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [k, v] : overlay.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object()) {
      deep_merge(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

/// Applies "dotted.key=value". The value is read as JSON when it parses,
/// otherwise as a plain string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must have the form key=value: '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &cfg;
  std::istringstream in(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(in, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("empty key segment", key);
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) {
        (*node)[parts[i]] = json::object();
      }
      node = &(*node)[parts[i]];
    }
  }
}

inline json builtin_defaults(const std::string& builtin) {
  json d = {
      {"mode", "fht"},
      {"init", {{"preset", nullptr}, {"amplitudes", nullptr}, {"coords", nullptr}, {"q", 1.0}, {"p", 1.0}}},
      {"integration", {{"dt", 1e-3}, {"t_final", 50.0}, {"sample_stride", 10}}},
      {"ensemble", {{"n_paths", 1}, {"master_seed", nullptr}, {"workers", detail::default_workers()}}},
      {"detector", {{"gamma_threshold", 1e-3}, {"dwell_samples", 100}}},
      {"output",
       {{"trajectory", "trajectory.csv"},
        {"summary", "summary.json"},
        {"records_dir", nullptr},
        {"delimiter", ","},
        {"track", json::array()}}}};
  if (builtin == "spin-measurement") {
    d["model"] = {{"builtin", builtin},
                  {"params",
                   {{"omega_q", 1.0}, {"mass", 1.0}, {"omega_cl", 0.05}, {"mu", 1.0},
                    {"noise_amplitude", 1.0}, {"hughston_mu", 3.0}}}};
    d["init"]["preset"] = "paper-fig1";
  } else if (builtin == "two-qubit") {
    d["model"] = {{"builtin", builtin},
                  {"params",
                   {{"omega_q", 1.0}, {"c_coupling", 0.1}, {"mass", 1.0}, {"omega_cl", 0.05},
                    {"mu", 1.0}, {"noise_amplitude", 1.0}, {"hughston_mu", 3.0}}}};
    d["init"]["preset"] = "two-qubit-entangled";
  } else if (builtin == "custom") {
    d["model"] = {{"builtin", builtin},
                  {"params", {{"noise_amplitude", 1.0}, {"hughston_mu", 3.0}}},
                  {"custom",
                   {{"classical", {{"mass", 1.0}, {"omega_cl", 0.0}}},
                    {"coupling", {{"q", 0.0}, {"p", 0.0}}}}}};
  } else {
    throw ConfigError("unknown builtin model '" + builtin +
                          "' (expected spin-measurement, two-qubit or custom)",
                      "model.builtin");
  }
  return d;
}

/// Fully resolved and validated configuration.
class RunConfig {
 public:
  /// `file_cfg` may be null; overrides are "dotted.key=value" strings.
  static RunConfig resolve(const json& file_cfg, const std::vector<std::string>& overrides) {
    json user = file_cfg.is_null() ? json::object() : file_cfg;
    if (!user.is_object()) throw ConfigError("configuration root must be an object");
    for (const auto& o : overrides) apply_override(user, o);
    detail::check_against(user, schema(), "");

    std::string builtin = "spin-measurement";
    if (user.contains("model") && user["model"].contains("builtin")) {
      builtin = user["model"]["builtin"].get<std::string>();
    }
    json cfg = builtin_defaults(builtin);
    // A user-chosen init source replaces the default preset.
    if (user.contains("init")) {
      const json& ui = user["init"];
      if ((ui.contains("amplitudes") && !ui["amplitudes"].is_null()) ||
          (ui.contains("coords") && !ui["coords"].is_null())) {
        cfg["init"]["preset"] = nullptr;
      }
    }
    deep_merge(cfg, user);
    detail::check_against(cfg, schema(), "");

    RunConfig rc;
    rc.seed_explicit_ = user.contains("ensemble") && user["ensemble"].contains("master_seed") &&
                        !user["ensemble"]["master_seed"].is_null();
    if (cfg["ensemble"]["master_seed"].is_null()) cfg["ensemble"]["master_seed"] = 0;
    rc.cfg_ = std::move(cfg);
    rc.validate();
    return rc;
  }

  static json load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'", "--config");
    json j = json::parse(in, nullptr, false, /*ignore_comments=*/true);
    if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON", "--config");
    return j;
  }

  const json& json_value() const noexcept { return cfg_; }

  /// Configuration embedded in output files: everything that determines the
  /// data, i.e. without the worker count.
  json embedded() const {
    json e = cfg_;
    e["ensemble"].erase("workers");
    return e;
  }

  std::string builtin() const { return cfg_["model"]["builtin"].get<std::string>(); }
  Mode mode() const { return parse_mode(cfg_["mode"].get<std::string>()); }
  double dt() const { return cfg_["integration"]["dt"].get<double>(); }
  double t_final() const { return cfg_["integration"]["t_final"].get<double>(); }
  int sample_stride() const { return cfg_["integration"]["sample_stride"].get<int>(); }
  std::size_t n_paths() const { return cfg_["ensemble"]["n_paths"].get<std::size_t>(); }
  int workers() const { return cfg_["ensemble"]["workers"].get<int>(); }
  bool seed_explicit() const noexcept { return seed_explicit_; }
  std::uint64_t master_seed() const {
    return cfg_["ensemble"]["master_seed"].get<std::uint64_t>();
  }
  DetectorSettings detector() const {
    return {cfg_["detector"]["gamma_threshold"].get<double>(),
            cfg_["detector"]["dwell_samples"].get<int>()};
  }
  SimulationOptions simulation_options() const {
    SimulationOptions o;
    o.sample_stride = sample_stride();
    o.detector = detector();
    return o;
  }
  char delimiter() const {
    const std::string d = cfg_["output"]["delimiter"].get<std::string>();
    return d == "\\t" ? '\t' : d.front();
  }
  std::optional<std::string> output(const std::string& key) const {
    const json& v = cfg_["output"][key];
    if (v.is_null()) return std::nullopt;
    return v.get<std::string>();
  }
  bool tracks(const std::string& what) const {
    for (const auto& t : cfg_["output"]["track"]) {
      if (t == what) return true;
    }
    return false;
  }

  /// Hilbert-space dimension of the configured model.
  int dimension() const {
    const std::string b = builtin();
    if (b == "spin-measurement") return 2;
    if (b == "two-qubit") return 4;
    return cfg_["model"]["custom"]["dim"].get<int>();
  }

 private:
  void validate() const {
    const json& model = cfg_["model"];
    const std::string b = builtin();
    static const std::map<std::string, std::vector<std::string>> allowed_params{
        {"spin-measurement", {"omega_q", "mass", "omega_cl", "mu", "noise_amplitude", "hughston_mu"}},
        {"two-qubit",
         {"omega_q", "c_coupling", "mass", "omega_cl", "mu", "noise_amplitude", "hughston_mu"}},
        {"custom", {"noise_amplitude", "hughston_mu"}}};
    for (const auto& [k, v] : model["params"].items()) {
      const auto& ok = allowed_params.at(b);
      if (std::find(ok.begin(), ok.end(), k) == ok.end()) {
        throw ConfigError("unknown key for model '" + b + "'", "model.params." + k);
      }
    }
    if (b != "custom" && model.contains("custom")) {
      throw ConfigError("only valid with builtin 'custom'", "model.custom");
    }
    if (b == "custom") {
      const json& c = model["custom"];
      if (!c.contains("dim")) throw ConfigError("missing", "model.custom.dim");
      if (c["dim"].get<int>() < 1) throw ConfigError("must be >= 1", "model.custom.dim");
      if (!c.contains("h_q")) throw ConfigError("missing", "model.custom.h_q");
      if (!c.contains("observables") || c["observables"].empty()) {
        throw ConfigError("at least one observable required", "model.custom.observables");
      }
      if (c.contains("delta_min") && c["delta_min"].is_string() && c["delta_min"] != "estimate") {
        throw ConfigError("must be a number or \"estimate\"", "model.custom.delta_min");
      }
    }
    (void)mode();
    if (!(dt() > 0.0)) throw ConfigError("must be > 0", "integration.dt");
    if (!(t_final() >= 0.0)) throw ConfigError("must be >= 0", "integration.t_final");
    if (sample_stride() < 1) throw ConfigError("must be >= 1", "integration.sample_stride");
    if (cfg_["ensemble"]["n_paths"].get<long long>() < 1) {
      throw ConfigError("must be >= 1", "ensemble.n_paths");
    }
    if (workers() < 1) throw ConfigError("must be >= 1", "ensemble.workers");
    if (!cfg_["ensemble"]["master_seed"].is_null() &&
        cfg_["ensemble"]["master_seed"].get<long long>() < 0 &&
        !cfg_["ensemble"]["master_seed"].is_number_unsigned()) {
      throw ConfigError("must be non-negative", "ensemble.master_seed");
    }
    if (!(detector().gamma_threshold > 0.0)) {
      throw ConfigError("must be > 0", "detector.gamma_threshold");
    }
    if (detector().dwell_samples < 1) throw ConfigError("must be >= 1", "detector.dwell_samples");
    const std::string d = cfg_["output"]["delimiter"].get<std::string>();
    if (!(d.size() == 1 || d == "\\t")) {
      throw ConfigError("must be a single character", "output.delimiter");
    }
    for (const auto& t : cfg_["output"]["track"]) {
      if (t != "concurrence") throw ConfigError("unknown tracked quantity", "output.track");
    }
    if (tracks("concurrence") && dimension() != 4) {
      throw ConfigError("concurrence requires a two-qubit model", "output.track");
    }
    const json& init = cfg_["init"];
    const int sources = !init["preset"].is_null() + !init["amplitudes"].is_null() +
                        !init["coords"].is_null();
    if (sources != 1) {
      throw ConfigError("exactly one of preset, amplitudes, coords must be set", "init");
    }
    if (!init["preset"].is_null()) {
      const auto& ps = init_presets();
      const std::string p = init["preset"].get<std::string>();
      if (std::find(ps.begin(), ps.end(), p) == ps.end()) {
        throw ConfigError("unknown preset '" + p + "'", "init.preset");
      }
    }
  }

  json cfg_;
  bool seed_explicit_ = false;
};

// -- operators --------------------------------------------------------------

struct Operator {
  Eigen::MatrixXcd matrix;
  std::string label;
};

inline Operator parse_operator(const json& j, const std::string& path, int dim) {
  const SpinHalf s = build_spin_half();
  const Eigen::MatrixXcd id2 = Eigen::MatrixXcd::Identity(2, 2);
  auto kron = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd m(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        m.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
      }
    }
    return m;
  };
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    const std::map<std::string, Eigen::MatrixXcd> named{
        {"sx", s.sx.matrix()}, {"sy", s.sy.matrix()}, {"sz", s.sz.matrix()}, {"id", id2},
        {"sx1", kron(s.sx.matrix(), id2)}, {"sy1", kron(s.sy.matrix(), id2)},
        {"sz1", kron(s.sz.matrix(), id2)}, {"sx2", kron(id2, s.sx.matrix())},
        {"sy2", kron(id2, s.sy.matrix())}, {"sz2", kron(id2, s.sz.matrix())}};
    const auto it = named.find(name);
    if (it == named.end()) throw ConfigError("unknown operator '" + name + "'", path);
    return {it->second, name};
  }
  if (!j.is_object()) throw ConfigError("operator must be a name or an object", path);
  std::string label = j.value("label", std::string{});
  auto only = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
      bool ok = k == "label";
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw ConfigError("unknown key", path + "." + k);
    }
  };
  if (j.contains("tensor")) {
    only({"tensor"});
    const json& f = j["tensor"];
    if (!f.is_array() || f.size() < 2) throw ConfigError("needs at least two factors", path + ".tensor");
    Operator acc = parse_operator(f[0], path + ".tensor[0]", -1);
    for (std::size_t i = 1; i < f.size(); ++i) {
      Operator b = parse_operator(f[i], path + ".tensor[" + std::to_string(i) + "]", -1);
      acc = {kron(acc.matrix, b.matrix), acc.label + "(x)" + b.label};
    }
    if (!label.empty()) acc.label = label;
    return acc;
  }
  if (j.contains("sum")) {
    only({"sum"});
    const json& terms = j["sum"];
    if (!terms.is_array() || terms.empty()) throw ConfigError("needs terms", path + ".sum");
    Operator acc = parse_operator(terms[0], path + ".sum[0]", dim);
    for (std::size_t i = 1; i < terms.size(); ++i) {
      Operator t = parse_operator(terms[i], path + ".sum[" + std::to_string(i) + "]", dim);
      if (t.matrix.rows() != acc.matrix.rows()) {
        throw ConfigError("terms have different dimensions", path + ".sum");
      }
      acc.matrix += t.matrix;
      acc.label += "+" + t.label;
    }
    if (!label.empty()) acc.label = label;
    return acc;
  }
  if (j.contains("scale")) {
    only({"scale", "op"});
    if (!j["scale"].is_number()) throw ConfigError("must be a number", path + ".scale");
    if (!j.contains("op")) throw ConfigError("missing", path + ".op");
    Operator o = parse_operator(j["op"], path + ".op", dim);
    o.matrix *= j["scale"].get<double>();
    o.label = label.empty() ? format_number(j["scale"].get<double>()) + "*" + o.label : label;
    return o;
  }
  if (j.contains("matrix")) {
    only({"matrix"});
    const json& m = j["matrix"];
    if (!m.is_array()) throw ConfigError("must be an array", path + ".matrix");
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(m.size() / 2.0)));
    if (dim > 0 && n != dim) {
      throw ConfigError("expected " + std::to_string(2 * dim * dim) + " numbers", path + ".matrix");
    }
    if (static_cast<std::size_t>(2 * n * n) != m.size() || n == 0) {
      throw ConfigError("needs 2 N^2 numbers (row-major real/imag pairs)", path + ".matrix");
    }
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        const std::size_t at = static_cast<std::size_t>(2 * (r * n + c));
        if (!m[at].is_number() || !m[at + 1].is_number()) {
          throw ConfigError("entries must be numbers", path + ".matrix");
        }
        out(r, c) = {m[at].get<double>(), m[at + 1].get<double>()};
      }
    }
    if ((out - out.adjoint()).cwiseAbs().maxCoeff() >= kHermiticityTol) {
      throw ConfigError("matrix is not Hermitian", path + ".matrix");
    }
    return {out, label.empty() ? "A" : label};
  }
  throw ConfigError("operator object needs one of tensor, sum, scale, matrix", path);
}

// -- model and initial state --------------------------------------------------

template <int N>
HermitianObservable<N> to_observable(const Operator& op, int dim, const std::string& path) {
  if (op.matrix.rows() != dim) {
    throw ConfigError("operator has dimension " + std::to_string(op.matrix.rows()) +
                          ", model has " + std::to_string(dim),
                      path);
  }
  try {
    return HermitianObservable<N>(ComplexMatrix<N>(op.matrix), op.label);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), path);
  }
}

template <int N>
HybridModel<N> build_model(const RunConfig& rc) {
  const json& cfg = rc.json_value();
  const json& p = cfg["model"]["params"];
  const std::string b = rc.builtin();
  auto num = [&](const char* k) { return p.at(k).get<double>(); };
  if (rc.dimension() != N && N != Dynamic) {
    throw DimensionError("model dimension does not match the instantiation");
  }
  if constexpr (N == 2 || N == Dynamic) {
    if (b == "spin-measurement") {
      SpinMeasurementParams sp{num("omega_q"), num("mass"), num("omega_cl"), num("mu"),
                               num("noise_amplitude"), rc.mode(), num("hughston_mu")};
      const HybridModel<2> m = spin_measurement_model(sp);
      if constexpr (N == 2) {
        return m;
      } else {
        HybridModel<N> out{HermitianObservable<N>(m.h_q.matrix(), m.h_q.label()), m.h_cl,
                           m.coupling_f,
                           ObservableSet<N>({HermitianObservable<N>(
                               m.observables.members()[0].matrix(),
                               m.observables.members()[0].label())})};
        out.noise_amplitude = m.noise_amplitude;
        out.mode = m.mode;
        out.hughston_mu = m.hughston_mu;
        return out;
      }
    }
  }
  if constexpr (N == 4) {
    if (b == "two-qubit") {
      TwoQubitParams tp{num("omega_q"), num("c_coupling"), num("mass"), num("omega_cl"),
                        num("mu"), num("noise_amplitude"), rc.mode(), num("hughston_mu")};
      return two_qubit_model(tp);
    }
  }
  if (b != "custom") throw DimensionError("builtin model instantiated with wrong dimension");

  const json& c = cfg["model"]["custom"];
  const int dim = c["dim"].get<int>();
  const auto hq = to_observable<N>(parse_operator(c["h_q"], "model.custom.h_q", dim), dim,
                                   "model.custom.h_q");
  std::vector<HermitianObservable<N>> obs;
  for (std::size_t i = 0; i < c["observables"].size(); ++i) {
    const std::string path = "model.custom.observables[" + std::to_string(i) + "]";
    obs.push_back(to_observable<N>(parse_operator(c["observables"][i], path, dim), dim, path));
  }
  double delta_min = 0.0;
  bool commuting = true;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t k = i + 1; k < obs.size(); ++k) commuting = commuting && commute(obs[i], obs[k]);
  }
  if (c.contains("delta_min") && c["delta_min"].is_number()) {
    delta_min = c["delta_min"].get<double>();
  } else if (!commuting) {
    delta_min = estimate_delta_min<N>(obs, 32, rc.master_seed());
  }
  HybridModel<N> m{
      hq,
      PhaseFunction::harmonic_oscillator(c["classical"]["mass"].get<double>(),
                                         c["classical"]["omega_cl"].get<double>()),
      PhaseFunction::linear(c["coupling"]["q"].get<double>(), c["coupling"]["p"].get<double>()),
      [&] {
        try {
          return ObservableSet<N>(obs, delta_min);
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), "model.custom.delta_min");
        }
      }()};
  if (!(c["classical"]["mass"].get<double>() > 0.0)) {
    throw ConfigError("must be > 0", "model.custom.classical.mass");
  }
  m.noise_amplitude = num("noise_amplitude");
  m.mode = rc.mode();
  m.hughston_mu = num("hughston_mu");
  m.validate();
  return m;
}

template <int N>
HybridState<N> build_init(const RunConfig& rc) {
  const json& init = rc.json_value()["init"];
  const int dim = rc.dimension();
  RealVector<N> x(2 * dim);
  if (!init["preset"].is_null()) {
    const std::string p = init["preset"].get<std::string>();
    Eigen::VectorXd v;
    auto need = [&](int d) {
      if (dim != d) {
        throw ConfigError("preset '" + p + "' needs a dimension-" + std::to_string(d) + " model",
                          "init.preset");
      }
    };
    if (p == "paper-fig1") {
      need(2);
      v = paper_fig1_state().coords();
    } else if (p == "sx+" || p == "sx-") {
      need(2);
      v = sx_overlap_state(p == "sx+" ? 1.0 : 0.0).coords();
    } else if (p == "sz+" || p == "sz-") {
      need(2);
      v = Eigen::VectorXd::Zero(4);
      v[p == "sz+" ? 0 : 1] = kSqrt2;
    } else if (p == "bell") {
      need(4);
      v = bell_state().coords();
    } else if (p == "two-qubit-entangled") {
      need(4);
      v = two_qubit_entangled_state().coords();
    } else if (p == "up-up") {
      need(4);
      v = Eigen::VectorXd::Zero(8);
      v[0] = kSqrt2;
    }
    x = v;
  } else if (!init["amplitudes"].is_null()) {
    const json& a = init["amplitudes"];
    if (static_cast<int>(a.size()) != dim) {
      throw ConfigError("expected " + std::to_string(dim) + " amplitudes", "init.amplitudes");
    }
    ComplexVector<N> c(dim);
    for (int k = 0; k < dim; ++k) {
      const json& e = a[static_cast<std::size_t>(k)];
      if (e.is_number()) {
        c[k] = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        c[k] = {e[0].get<double>(), e[1].get<double>()};
      } else {
        throw ConfigError("amplitude must be a number or [re, im]",
                          "init.amplitudes[" + std::to_string(k) + "]");
      }
    }
    if (c.squaredNorm() == 0.0) throw ConfigError("degenerate state", "init.amplitudes");
    x = from_complex<N>(c).coords();
  } else {
    const json& a = init["coords"];
    if (static_cast<int>(a.size()) != 2 * dim) {
      throw ConfigError("expected " + std::to_string(2 * dim) + " coordinates", "init.coords");
    }
    for (int k = 0; k < 2 * dim; ++k) {
      if (!a[static_cast<std::size_t>(k)].is_number()) {
        throw ConfigError("coordinates must be numbers", "init.coords");
      }
      x[k] = a[static_cast<std::size_t>(k)].get<double>();
    }
  }
  if (!(x.squaredNorm() > 0.0)) throw ConfigError("degenerate state", "init");
  StateVector<N> s(x);
  s.normalize();
  return {s, {init["q"].get<double>(), init["p"].get<double>()}, 0.0};
}

}  // namespace fht::config

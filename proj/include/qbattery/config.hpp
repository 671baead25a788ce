#pragma once

// JSON run configuration. Every physics default lives in default_config_json();
// user files are merged onto it key by key, unknown keys are rejected, and the
// effective configuration is echoed into every output for provenance.

#include "qbattery/errors.hpp"
#include "qbattery/evolve.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/model.hpp"
#include "qbattery/observables.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qbattery {

using json = nlohmann::ordered_json;

inline constexpr int kDefaultsVersion = 1;

inline const json& default_config_json() {
  static const json defaults = json::parse(R"({
    "defaults_version": 1,
    "model": {
      "N": 3,
      "omega_c": 0.5,
      "omega_a": 2.0,
      "omega_cat": 0.06,
      "J": 1.6,
      "g": 0.3,
      "lambda": 1.5,
      "kappa": 0.15,
      "gamma": 0.01,
      "gamma_per_spin": null,
      "T": 0.8,
      "k_B": 1.0,
      "photon_cutoff": 5
    },
    "integrator": {
      "method": "rk4",
      "dt": 0.005,
      "t_end": 500.0,
      "snapshot_stride": 100,
      "renormalize": false
    },
    "initial_state": {
      "battery": "excited",
      "cavity": "vacuum",
      "catalyst": "plus"
    },
    "dissipator": "standard",
    "battery_h": "local+J",
    "output": {
      "dir": "out",
      "prefix": "run"
    },
    "summary": {
      "steady_window": 0.2,
      "exact_steady_state": true
    },
    "sweep": null,
    "seed": 20240917
  })");
  return defaults;
}

struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

struct RunConfig {
  ModelParams model;
  IntegratorConfig integrator;
  double t_end = 500.0;
  InitialStateSpec initial;
  DissipatorMode dissipator = DissipatorMode::standard;
  BatteryHamiltonianMode battery_h = BatteryHamiltonianMode::local_plus_exchange;
  std::string output_dir = "out";
  std::string output_prefix = "run";
  double steady_window = 0.2;
  bool exact_steady_state = true;
  std::optional<SweepAxis> sweep;
  std::uint64_t seed = 20240917;
  json effective;  // merged configuration as parsed
};

inline const std::vector<std::string>& model_param_names() {
  static const std::vector<std::string> names = {"N", "omega_c", "omega_a", "omega_cat", "J",
                                                 "g", "lambda",  "kappa",   "gamma",     "T",
                                                 "k_B", "photon_cutoff"};
  return names;
}

inline bool is_model_param(const std::string& name) {
  const auto& n = model_param_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

/// Sets a ModelParams field by name; integer fields must receive integral values.
inline void set_model_param(ModelParams& p, const std::string& name, double value) {
  auto integral = [&](const char* field) {
    if (value != std::floor(value)) {
      throw ConfigError("field 'model." + std::string(field) + "': expected an integer");
    }
    return static_cast<int>(value);
  };
  if (name == "N") p.N = integral("N");
  else if (name == "omega_c") p.omega_c = value;
  else if (name == "omega_a") p.omega_a = value;
  else if (name == "omega_cat") p.omega_cat = value;
  else if (name == "J") p.J = value;
  else if (name == "g") p.g = value;
  else if (name == "lambda") p.lambda = value;
  else if (name == "kappa") p.kappa = value;
  else if (name == "gamma") p.gamma = value;
  else if (name == "T") p.T = value;
  else if (name == "k_B") p.k_B = value;
  else if (name == "photon_cutoff") p.photon_cutoff = integral("photon_cutoff");
  else throw ConfigError("unknown model parameter '" + name + "'");
}

inline double get_model_param(const ModelParams& p, const std::string& name) {
  if (name == "N") return p.N;
  if (name == "omega_c") return p.omega_c;
  if (name == "omega_a") return p.omega_a;
  if (name == "omega_cat") return p.omega_cat;
  if (name == "J") return p.J;
  if (name == "g") return p.g;
  if (name == "lambda") return p.lambda;
  if (name == "kappa") return p.kappa;
  if (name == "gamma") return p.gamma;
  if (name == "T") return p.T;
  if (name == "k_B") return p.k_B;
  if (name == "photon_cutoff") return p.photon_cutoff;
  throw ConfigError("unknown model parameter '" + name + "'");
}

namespace detail {

inline void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("field '" + path + "': expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown field '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("field '" + path + "': expected a number");
  return j.get<double>();
}

inline std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError("field '" + path + "': expected a string");
  return j.get<std::string>();
}

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {  // byte is 1-based
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Parses an override value as JSON (numbers, booleans, null, lists, objects);
/// anything that does not parse is taken as a bare string.
inline json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
  }
  return json(text);
}

}  // namespace detail

/// Applies `key=value` to the raw configuration. Bare model parameter names
/// (e.g. `g=0.2`) address the model block; dotted paths address any field.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "': expected key=value");
  }
  std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  if (key.find('.') == std::string::npos && is_model_param(key)) key = "model." + key;
  json patch = json::object();
  json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': malformed key");
    if (dot == std::string::npos) {
      (*node)[part] = detail::parse_scalar(value);
      break;
    }
    node = &(*node)[part];
    *node = json::object();
    start = dot + 1;
  }
  json merged = cfg;
  json base = default_config_json();
  detail::merge_strict(base, patch, "");  // validates the key path
  // merge into the user-level config (keys may be absent there)
  std::function<void(json&, const json&)> merge = [&](json& dst, const json& src) {
    for (auto it = src.begin(); it != src.end(); ++it) {
      if (it.value().is_object() && dst.contains(it.key()) && dst[it.key()].is_object()) {
        merge(dst[it.key()], it.value());
      } else {
        dst[it.key()] = it.value();
      }
    }
  };
  if (!merged.is_object()) merged = json::object();
  merge(merged, patch);
  cfg = std::move(merged);
}

inline RunConfig parse_config(const json& user) {
  json eff = default_config_json();
  detail::merge_strict(eff, user, "");
  if (!eff["defaults_version"].is_number_integer() || eff["defaults_version"].get<int>() != kDefaultsVersion) {
    throw ConfigError("field 'defaults_version': unsupported version (expected " +
                      std::to_string(kDefaultsVersion) + ")");
  }
  RunConfig c;
  const json& m = eff["model"];
  for (const auto& name : model_param_names()) {
    set_model_param(c.model, name, detail::number_at(m[name], "model." + name));
  }
  if (!m["gamma_per_spin"].is_null()) {
    if (!m["gamma_per_spin"].is_array()) throw ConfigError("field 'model.gamma_per_spin': expected an array or null");
    for (const auto& v : m["gamma_per_spin"]) c.model.gamma_per_spin.push_back(detail::number_at(v, "model.gamma_per_spin"));
  }
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    std::string what = e.what();
    const std::string prefix = "ModelParams.";
    if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
    const auto colon = what.find(':');
    if (colon == std::string::npos) throw ConfigError("field 'model': " + what);
    throw ConfigError("field 'model." + what.substr(0, colon) + "'" + what.substr(colon));
  }
  try {
    (void)signature(c.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field 'model': ") + e.what());
  }

  const json& in = eff["integrator"];
  const std::string method = detail::string_at(in["method"], "integrator.method");
  if (method == "rk4") c.integrator.method = IntegratorMethod::rk4_fixed;
  else if (method == "expm-krylov") c.integrator.method = IntegratorMethod::expm_krylov_reference;
  else throw ConfigError("field 'integrator.method': expected \"rk4\" or \"expm-krylov\"");
  c.integrator.dt = detail::number_at(in["dt"], "integrator.dt");
  if (!(c.integrator.dt > 0.0)) throw ConfigError("field 'integrator.dt': must be > 0");
  c.t_end = detail::number_at(in["t_end"], "integrator.t_end");
  if (!(c.t_end > 0.0)) throw ConfigError("field 'integrator.t_end': must be > 0");
  const double ratio = c.t_end / c.integrator.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("field 'integrator.t_end': must be a multiple of integrator.dt");
  }
  if (!in["snapshot_stride"].is_number_integer() || in["snapshot_stride"].get<long long>() < 1) {
    throw ConfigError("field 'integrator.snapshot_stride': expected a positive integer");
  }
  c.integrator.snapshot_stride = in["snapshot_stride"].get<std::size_t>();
  if (!in["renormalize"].is_boolean()) throw ConfigError("field 'integrator.renormalize': expected a boolean");
  c.integrator.renormalize = in["renormalize"].get<bool>();

  const json& is = eff["initial_state"];
  if (is["battery"].is_string()) {
    const auto b = is["battery"].get<std::string>();
    if (b == "excited") c.initial.battery.assign(static_cast<std::size_t>(c.model.N), 1);
    else if (b == "ground") c.initial.battery.assign(static_cast<std::size_t>(c.model.N), 0);
    else throw ConfigError("field 'initial_state.battery': expected \"excited\", \"ground\" or a 0/1 list");
  } else if (is["battery"].is_array()) {
    for (const auto& v : is["battery"]) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
        throw ConfigError("field 'initial_state.battery': list entries must be 0 or 1");
      }
      c.initial.battery.push_back(v.get<int>());
    }
    if (c.initial.battery.size() != static_cast<std::size_t>(c.model.N)) {
      throw ConfigError("field 'initial_state.battery': list length must equal model.N");
    }
  } else {
    throw ConfigError("field 'initial_state.battery': expected a string or a list");
  }
  const json& cav = is["cavity"];
  if (cav.is_string() && cav.get<std::string>() == "vacuum") {
    c.initial.cavity = InitialStateSpec::Cavity::vacuum;
  } else if (cav.is_string() && cav.get<std::string>() == "thermal") {
    c.initial.cavity = InitialStateSpec::Cavity::thermal;
  } else if (cav.is_object() && cav.size() == 1 && cav.contains("fock") && cav["fock"].is_number_integer()) {
    c.initial.cavity = InitialStateSpec::Cavity::fock;
    c.initial.fock = cav["fock"].get<int>();
    if (c.initial.fock < 0 || c.initial.fock > c.model.photon_cutoff) {
      throw ConfigError("field 'initial_state.cavity.fock': must lie in [0, model.photon_cutoff]");
    }
  } else {
    throw ConfigError("field 'initial_state.cavity': expected \"vacuum\", \"thermal\" or {\"fock\": k}");
  }
  const json& cat = is["catalyst"];
  if (cat.is_string()) {
    const auto s = cat.get<std::string>();
    if (s == "plus") c.initial.catalyst_bloch = {1.0, 0.0, 0.0};
    else if (s == "ground") c.initial.catalyst_bloch = {0.0, 0.0, -1.0};
    else if (s == "excited") c.initial.catalyst_bloch = {0.0, 0.0, 1.0};
    else throw ConfigError("field 'initial_state.catalyst': expected \"plus\", \"ground\", \"excited\" or {\"bloch\": [x,y,z]}");
  } else if (cat.is_object() && cat.size() == 1 && cat.contains("bloch") && cat["bloch"].is_array() &&
             cat["bloch"].size() == 3) {
    for (std::size_t k = 0; k < 3; ++k) {
      c.initial.catalyst_bloch[k] = detail::number_at(cat["bloch"][k], "initial_state.catalyst.bloch");
    }
    const auto [x, y, z] = c.initial.catalyst_bloch;
    if (x * x + y * y + z * z > 1.0 + 1e-12) {
      throw ConfigError("field 'initial_state.catalyst.bloch': vector length exceeds 1");
    }
  } else {
    throw ConfigError("field 'initial_state.catalyst': expected a preset name or {\"bloch\": [x,y,z]}");
  }

  const std::string diss = detail::string_at(eff["dissipator"], "dissipator");
  if (diss == "standard") c.dissipator = DissipatorMode::standard;
  else if (diss == "paper-literal") c.dissipator = DissipatorMode::paper_literal;
  else throw ConfigError("field 'dissipator': expected \"standard\" or \"paper-literal\"");

  const std::string bh = detail::string_at(eff["battery_h"], "battery_h");
  if (bh == "local") c.battery_h = BatteryHamiltonianMode::local_only;
  else if (bh == "local+J") c.battery_h = BatteryHamiltonianMode::local_plus_exchange;
  else throw ConfigError("field 'battery_h': expected \"local\" or \"local+J\"");

  c.output_dir = detail::string_at(eff["output"]["dir"], "output.dir");
  c.output_prefix = detail::string_at(eff["output"]["prefix"], "output.prefix");
  if (c.output_prefix.empty() || c.output_prefix.find('/') != std::string::npos) {
    throw ConfigError("field 'output.prefix': must be a non-empty file-name stem");
  }

  c.steady_window = detail::number_at(eff["summary"]["steady_window"], "summary.steady_window");
  if (!(c.steady_window > 0.0 && c.steady_window <= 1.0)) {
    throw ConfigError("field 'summary.steady_window': must lie in (0, 1]");
  }
  if (!eff["summary"]["exact_steady_state"].is_boolean()) {
    throw ConfigError("field 'summary.exact_steady_state': expected a boolean");
  }
  c.exact_steady_state = eff["summary"]["exact_steady_state"].get<bool>();

  const json& sw = eff["sweep"];
  if (!sw.is_null()) {
    if (!sw.is_object() || !sw.contains("param") || !sw.contains("values") || sw.size() != 2) {
      throw ConfigError("field 'sweep': expected {\"param\": name, \"values\": [...]}");
    }
    SweepAxis axis;
    axis.param = detail::string_at(sw["param"], "sweep.param");
    if (!is_model_param(axis.param)) {
      throw ConfigError("field 'sweep.param': '" + axis.param + "' is not a model parameter");
    }
    if (!sw["values"].is_array() || sw["values"].empty()) {
      throw ConfigError("field 'sweep.values': expected a non-empty list");
    }
    for (const auto& v : sw["values"]) axis.values.push_back(detail::number_at(v, "sweep.values"));
    for (double v : axis.values) {
      ModelParams probe = c.model;
      set_model_param(probe, axis.param, v);
      try {
        probe.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("field 'sweep.values': value " + std::to_string(v) + " invalid (" + e.what() + ")");
      }
    }
    c.sweep = std::move(axis);
  }

  if (!eff["seed"].is_number_unsigned()) throw ConfigError("field 'seed': expected a non-negative integer");
  c.seed = eff["seed"].get<std::uint64_t>();
  c.effective = std::move(eff);
  return c;
}

/// Parses configuration text, reporting JSON syntax errors with line and column.
inline json parse_config_text(const std::string& text, const std::string& origin = "config") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(origin + ": JSON syntax error at " + detail::line_column(text, e.byte) + ": " + what);
  }
}

inline RunConfig load_config(const std::optional<std::string>& path,
                             const std::vector<std::string>& overrides = {}) {
  json raw = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + *path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    raw = parse_config_text(ss.str(), *path);
  }
  for (const auto& o : overrides) apply_override(raw, o);
  return parse_config(raw);
}

/// Copy of `c` with one model parameter replaced, effective JSON kept in sync.
inline RunConfig with_model_param(RunConfig c, const std::string& name, double value) {
  set_model_param(c.model, name, value);
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid parameter value: ") + e.what());
  }
  if (name == "N" || name == "photon_cutoff") {
    c.effective["model"][name] = static_cast<int>(value);
    if (name == "N" && !c.initial.battery.empty()) {
      const int fill = c.initial.battery.front();
      c.initial.battery.assign(static_cast<std::size_t>(c.model.N), fill);
    }
  } else {
    c.effective["model"][name] = value;
  }
  return c;
}

}  // namespace qbattery

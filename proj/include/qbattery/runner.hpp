#pragma once

// Run orchestration: single trajectories to CSV, parameter sweeps on a worker
// pool, and per-run summaries.

#include "qbattery/config.hpp"
#include "qbattery/errors.hpp"
#include "qbattery/evolve.hpp"
#include "qbattery/observables.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace qbattery {

inline constexpr const char* kCsvColumns =
    "t,W_raw,W_per_spin,W_per_capacity,E_batt,E_cat,E_cav,trace_err,min_eig,purity,dark_overlap";

struct SnapshotRow {
  double t = 0.0;
  double W_raw = 0.0;
  double W_per_spin = 0.0;
  double W_per_capacity = 0.0;
  double E_batt = 0.0;
  double E_cat = 0.0;
  double E_cav = 0.0;
  double trace_err = 0.0;
  double min_eig = 0.0;
  double purity = 0.0;
  double dark_overlap = 0.0;
};

namespace detail {

inline std::string fmt_number(double v, const char* spec = "%.12e") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

/// Short, stable rendering of a parameter value for file names and labels.
inline std::string fmt_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline std::string format_row(const SnapshotRow& r) {
  using detail::fmt_number;
  std::string s = fmt_number(r.t, "%.6f");
  for (double v : {r.W_raw, r.W_per_spin, r.W_per_capacity, r.E_batt, r.E_cat, r.E_cav, r.trace_err,
                   r.min_eig, r.purity, r.dark_overlap}) {
    s += ',';
    s += fmt_number(v);
  }
  return s;
}

/// Evaluates the CSV observables of full-system states for one model.
class RowEvaluator {
 public:
  RowEvaluator(const ModelParams& p, BatteryHamiltonianMode mode)
      : p_(p),
        h_batt_(battery_hamiltonian(p, mode).matrix()),
        h_other_(battery_hamiltonian(p, mode == BatteryHamiltonianMode::local_only
                                            ? BatteryHamiltonianMode::local_plus_exchange
                                            : BatteryHamiltonianMode::local_only)
                     .matrix()),
        sites_(battery_sites(p)) {
    if (p.g != 0.0 || p.lambda != 0.0) dark_ = quasi_dark_state(p);
  }

  SnapshotRow evaluate(double t, const DensityMatrix& rho, const StateDiagnostics& diag) {
    SnapshotRow r;
    r.t = t;
    const DensityMatrix rb = partial_trace(rho, sites_);
    const ErgotropyReport w = ergotropy(rb.matrix(), h_batt_);
    r.W_raw = w.ergotropy;
    r.W_per_spin = w.ergotropy / p_.N;
    r.W_per_capacity = p_.omega_a != 0.0 ? w.ergotropy / (p_.N * p_.omega_a)
                                         : std::numeric_limits<double>::quiet_NaN();
    r.E_batt = w.energy;
    r.E_cat = subsystem_energy(rho, Subsystem::catalyst, p_);
    r.E_cav = subsystem_energy(rho, Subsystem::cavity, p_);
    r.trace_err = diag.trace_error;
    r.min_eig = diag.min_eigenvalue;
    r.purity = purity(rho);
    r.dark_overlap = dark_ ? dark_state_overlap(rho, *dark_) : std::numeric_limits<double>::quiet_NaN();
    last_other_W_ = ergotropy(rb.matrix(), h_other_).ergotropy;
    last_herm_err_ = diag.hermiticity_error;
    return r;
  }

  /// Ergotropy under the other battery-Hamiltonian mode for the last evaluated state.
  double last_other_ergotropy() const { return last_other_W_; }
  double last_hermiticity_error() const { return last_herm_err_; }

 private:
  ModelParams p_;
  Matrix h_batt_;
  Matrix h_other_;
  std::vector<std::size_t> sites_;
  std::optional<StateVector> dark_;
  double last_other_W_ = 0.0;
  double last_herm_err_ = 0.0;
};

struct ErgotropyWindow {
  double W_raw = 0.0;
  double W_per_spin = 0.0;
  double W_per_capacity = 0.0;
};

struct ExactSteadyState {
  bool computed = false;
  bool degenerate = false;
  std::string note;
  double residual = 0.0;
  double W_local = 0.0;
  double W_local_plus_exchange = 0.0;
  double dark_overlap = 0.0;
};

struct RunSummary {
  std::string param;  // empty for a plain simulate
  double value = 0.0;
  std::string csv_path;
  bool ok = true;
  int exit_code = 0;
  std::string error;
  std::size_t snapshots = 0;
  ErgotropyWindow steady_local;
  ErgotropyWindow steady_local_plus_exchange;
  double final_W_raw = 0.0;
  double catalyst_energy_drift = 0.0;
  double dark_overlap_mean = 0.0;
  double max_trace_err = 0.0;
  double min_min_eig = 0.0;
  double max_hermiticity_err = 0.0;
  ExactSteadyState exact;

  /// Steady-window ergotropy under the given battery-Hamiltonian mode.
  const ErgotropyWindow& steady(BatteryHamiltonianMode m) const {
    return m == BatteryHamiltonianMode::local_only ? steady_local : steady_local_plus_exchange;
  }
};

namespace detail {

inline void write_csv_preamble(std::ostream& os, const RunConfig& cfg) {
  os << "# qbattery time series\n";
  os << "# defaults_version: " << kDefaultsVersion << "\n";
  os << "# config: " << cfg.effective.dump() << "\n";
  os << kCsvColumns << "\n";
}

inline ExactSteadyState exact_steady_state(const ModelParams& p) {
  ExactSteadyState ex;
  const std::size_t d = signature(p).total();
  if (d * d > kSuperOperatorCap) {
    ex.note = "skipped: d^2 above the superoperator cap";
    return ex;
  }
  try {
    const SteadyStateResult ss = steady_state(p);
    ex.degenerate = ss.degenerate;
    if (ss.degenerate) {
      ex.note = "degenerate stationary manifold of dimension " + std::to_string(ss.manifold.size());
      return ex;
    }
    const DensityMatrix& rho = *ss.state;
    ex.computed = true;
    ex.residual = ss.residual;
    ex.W_local = battery_ergotropy(rho, p, BatteryHamiltonianMode::local_only).ergotropy;
    ex.W_local_plus_exchange = battery_ergotropy(rho, p, BatteryHamiltonianMode::local_plus_exchange).ergotropy;
    ex.dark_overlap = (p.g != 0.0 || p.lambda != 0.0) ? dark_state_overlap(rho, p)
                                                      : std::numeric_limits<double>::quiet_NaN();
  } catch (const SolverError& e) {
    ex.note = std::string("solver failure: ") + e.what();
  }
  return ex;
}

}  // namespace detail

/// Propagates the configured model, streaming one CSV row per snapshot into
/// `csv`. On a physics abort the partial output is kept, an error sentinel row
/// (time of failure, all observables nan) is appended and the abort rethrown.
inline RunSummary run_single(const RunConfig& cfg, std::ostream& csv) {
  RunSummary sum;
  detail::write_csv_preamble(csv, cfg);
  const DensityMatrix rho0 = build_initial_state(cfg.model, cfg.initial);
  const MasterEquation eq = build_master_equation(cfg.model, cfg.dissipator);
  RowEvaluator eval(cfg.model, cfg.battery_h);

  const double window_start = (1.0 - cfg.steady_window) * cfg.t_end - 1e-9 * cfg.t_end;
  double e_cat_min = std::numeric_limits<double>::infinity();
  double e_cat_max = -std::numeric_limits<double>::infinity();
  double dark_sum = 0.0;
  double win_main = 0.0;
  double win_other = 0.0;
  std::size_t win_count = 0;
  sum.min_min_eig = std::numeric_limits<double>::infinity();

  try {
    propagate_observed(rho0, eq, cfg.integrator, cfg.t_end,
                       [&](double t, const DensityMatrix& rho, const StateDiagnostics& diag) {
                         const SnapshotRow row = eval.evaluate(t, rho, diag);
                         csv << format_row(row) << '\n';
                         ++sum.snapshots;
                         e_cat_min = std::min(e_cat_min, row.E_cat);
                         e_cat_max = std::max(e_cat_max, row.E_cat);
                         dark_sum += row.dark_overlap;
                         sum.max_trace_err = std::max(sum.max_trace_err, row.trace_err);
                         sum.min_min_eig = std::min(sum.min_min_eig, row.min_eig);
                         sum.max_hermiticity_err = std::max(sum.max_hermiticity_err, eval.last_hermiticity_error());
                         sum.final_W_raw = row.W_raw;
                         if (t >= window_start) {
                           win_main += row.W_raw;
                           win_other += eval.last_other_ergotropy();
                           ++win_count;
                         }
                       });
  } catch (const PhysicsAbort& e) {
    SnapshotRow sentinel;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    sentinel = {e.time(), nan, nan, nan, nan, nan, nan, nan, nan, nan, nan};
    csv << "# ERROR physics abort: " << e.what() << '\n';
    csv << format_row(sentinel) << '\n';
    csv.flush();
    throw;
  }
  csv.flush();

  const auto norm = [&](double w) {
    ErgotropyWindow out;
    out.W_raw = w;
    out.W_per_spin = w / cfg.model.N;
    out.W_per_capacity = cfg.model.omega_a != 0.0 ? w / (cfg.model.N * cfg.model.omega_a)
                                                  : std::numeric_limits<double>::quiet_NaN();
    return out;
  };
  const double mean_main = win_count ? win_main / static_cast<double>(win_count) : 0.0;
  const double mean_other = win_count ? win_other / static_cast<double>(win_count) : 0.0;
  if (cfg.battery_h == BatteryHamiltonianMode::local_only) {
    sum.steady_local = norm(mean_main);
    sum.steady_local_plus_exchange = norm(mean_other);
  } else {
    sum.steady_local_plus_exchange = norm(mean_main);
    sum.steady_local = norm(mean_other);
  }
  sum.catalyst_energy_drift = e_cat_max - e_cat_min;
  sum.dark_overlap_mean = dark_sum / static_cast<double>(sum.snapshots);
  if (cfg.exact_steady_state && cfg.dissipator == DissipatorMode::standard) {
    sum.exact = detail::exact_steady_state(cfg.model);
  } else {
    sum.exact.note = cfg.exact_steady_state ? "skipped: paper-literal generator is not trace preserving"
                                            : "disabled by configuration";
  }
  return sum;
}

/// run_single into `path`, creating parent directories.
inline RunSummary run_to_file(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
  RunSummary s = run_single(cfg, out);
  s.csv_path = path.string();
  return s;
}

inline std::filesystem::path sweep_csv_path(const RunConfig& cfg, const std::string& param, double value) {
  return std::filesystem::path(cfg.output_dir) /
         (cfg.output_prefix + "_" + param + "_" + detail::fmt_label(value) + ".csv");
}

/// Executes every value of `axis` on `jobs` workers. A failed point is
/// recorded in its summary row; sibling points keep running.
inline std::vector<RunSummary> run_sweep(const RunConfig& base, const SweepAxis& axis, unsigned jobs) {
  if (axis.values.empty()) throw ConfigError("field 'sweep.values': expected a non-empty list");
  if (!is_model_param(axis.param)) throw ConfigError("field 'sweep.param': unknown parameter '" + axis.param + "'");
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(axis.values.size()));

  std::vector<RunSummary> rows(axis.values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= axis.values.size()) return;
      RunSummary& row = rows[k];
      const double v = axis.values[k];
      const auto path = sweep_csv_path(base, axis.param, v);
      try {
        RunConfig cfg = with_model_param(base, axis.param, v);
        cfg.sweep.reset();
        row = run_to_file(cfg, path);
      } catch (const ConfigError& e) {
        row.ok = false;
        row.exit_code = 2;
        row.error = e.what();
      } catch (const PhysicsAbort& e) {
        row.ok = false;
        row.exit_code = 3;
        row.error = e.what();
      } catch (const SolverError& e) {
        row.ok = false;
        row.exit_code = 4;
        row.error = e.what();
      } catch (const std::exception& e) {
        row.ok = false;
        row.exit_code = 2;
        row.error = e.what();
      }
      row.param = axis.param;
      row.value = v;
      row.csv_path = path.string();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline json to_json(const ErgotropyWindow& w) {
  return json{{"W_raw", w.W_raw}, {"W_per_spin", w.W_per_spin}, {"W_per_capacity", w.W_per_capacity}};
}

inline json to_json(const RunSummary& s) {
  json j;
  if (!s.param.empty()) {
    j["param"] = s.param;
    j["value"] = s.value;
  }
  j["csv"] = s.csv_path;
  j["status"] = s.ok ? "ok" : "failed";
  if (!s.ok) {
    j["exit_code"] = s.exit_code;
    j["error"] = s.error;
    return j;
  }
  j["snapshots"] = s.snapshots;
  j["steady_window_ergotropy"] = {{"local", to_json(s.steady_local)},
                                  {"local+J", to_json(s.steady_local_plus_exchange)}};
  j["final_W_raw"] = s.final_W_raw;
  j["catalyst_energy_drift"] = s.catalyst_energy_drift;
  j["dark_overlap_mean"] = s.dark_overlap_mean;
  j["max_trace_err"] = s.max_trace_err;
  j["min_eigenvalue"] = s.min_min_eig;
  j["max_hermiticity_err"] = s.max_hermiticity_err;
  json ex;
  ex["computed"] = s.exact.computed;
  if (s.exact.computed) {
    ex["residual"] = s.exact.residual;
    ex["W_raw"] = {{"local", s.exact.W_local}, {"local+J", s.exact.W_local_plus_exchange}};
    ex["dark_overlap"] = s.exact.dark_overlap;
  } else {
    ex["degenerate"] = s.exact.degenerate;
    ex["note"] = s.exact.note;
  }
  j["exact_steady_state"] = ex;
  return j;
}

inline json sweep_summary_json(const RunConfig& cfg, const std::string& param,
                               const std::vector<RunSummary>& rows) {
  json j;
  j["defaults_version"] = kDefaultsVersion;
  j["config"] = cfg.effective;
  j["param"] = param;
  j["steady_window"] = {cfg.steady_window, "fraction of t_end at the end of the time axis"};
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(to_json(r));
  return j;
}

inline void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace qbattery

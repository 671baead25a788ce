// qbattery: command-line front end for the catalytic quantum battery model.

#include "qbattery/config.hpp"
#include "qbattery/reports.hpp"
#include "qbattery/runner.hpp"
#include "qbattery/testing/selftest.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace qbattery;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  unsigned jobs = 0;
  std::string dissipator;
  std::string battery_h;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory (overrides output.dir)");
  sub->add_option("--jobs", o.jobs, "worker threads for sweeps (0 = available parallelism)");
  sub->add_option("--dissipator", o.dissipator, "cavity dissipator form")
      ->check(CLI::IsMember({"standard", "paper-literal"}));
  sub->add_option("--battery-h", o.battery_h, "battery Hamiltonian used for the CSV ergotropy columns")
      ->check(CLI::IsMember({"local", "local+J"}));
  sub->add_option("--override", o.overrides, "key=value patch, repeatable (bare model names allowed)");
}

struct Loaded {
  RunConfig cfg;
  json raw;
};

Loaded load(const CommonOptions& o) {
  json raw = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file '" + o.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    raw = parse_config_text(ss.str(), o.config_path);
    if (!raw.is_object()) throw ConfigError(o.config_path + ": top level must be a JSON object");
  }
  if (!o.dissipator.empty()) apply_override(raw, "dissipator=" + o.dissipator);
  if (!o.battery_h.empty()) apply_override(raw, "battery_h=" + o.battery_h);
  if (!o.out_dir.empty()) apply_override(raw, "output.dir=" + o.out_dir);
  for (const auto& ov : o.overrides) apply_override(raw, ov);
  Loaded l{parse_config(raw), raw};
  return l;
}

std::set<std::string> explicit_model_keys(const json& raw) {
  std::set<std::string> keys;
  if (raw.contains("model") && raw["model"].is_object()) {
    for (auto it = raw["model"].begin(); it != raw["model"].end(); ++it) keys.insert(it.key());
  }
  return keys;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_summary_line(const RunSummary& s, BatteryHamiltonianMode m) {
  if (!s.ok) {
    std::fprintf(stderr, "  %s=%g  FAILED (exit %d): %s\n", s.param.c_str(), s.value, s.exit_code, s.error.c_str());
    return;
  }
  const auto& w = s.steady(m);
  std::fprintf(stderr, "  %s%s%-8s W_ss[%s] raw %.5f  per-cap %.5f  cat drift %.2e  dark %.4f\n",
               s.param.c_str(), s.param.empty() ? "" : "=",
               s.param.empty() ? "" : detail::fmt_label(s.value).c_str(), to_string(m), w.W_raw,
               w.W_per_capacity, s.catalyst_energy_drift, s.dark_overlap_mean);
}

int cmd_simulate(const CommonOptions& o) {
  const auto [cfg, raw] = load(o);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path csv = fs::path(cfg.output_dir) / (cfg.output_prefix + ".csv");
  RunSummary s = run_to_file(cfg, csv);
  write_json(to_json(s), fs::path(cfg.output_dir) / (cfg.output_prefix + ".summary.json"));
  std::fprintf(stderr, "wrote %s (%zu snapshots, %.1f s)\n", csv.string().c_str(), s.snapshots, seconds_since(t0));
  print_summary_line(s, cfg.battery_h);
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const auto [cfg, raw] = load(o);
  if (!cfg.sweep) throw ConfigError("field 'sweep': the sweep subcommand needs {\"param\": ..., \"values\": [...]}");
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_sweep(cfg, *cfg.sweep, o.jobs);
  const fs::path summary = fs::path(cfg.output_dir) / (cfg.output_prefix + "_summary.json");
  write_json(sweep_summary_json(cfg, cfg.sweep->param, rows), summary);
  std::fprintf(stderr, "sweep over %s: %zu points in %.1f s, summary %s\n", cfg.sweep->param.c_str(), rows.size(),
               seconds_since(t0), summary.string().c_str());
  int worst = 0;
  for (const auto& r : rows) {
    print_summary_line(r, cfg.battery_h);
    worst = std::max(worst, r.exit_code);
  }
  return worst;
}

int cmd_reproduce(const CommonOptions& o, int fig, const std::vector<double>& gammas,
                  const std::vector<double>& values) {
  const auto [cfg, raw] = load(o);
  FigureOptions fo;
  fo.gammas = gammas;
  if (!values.empty()) fo.values = values;
  fo.user_fixed = explicit_model_keys(raw);
  fo.jobs = o.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const FigureReport rep = reproduce_figure(fig, cfg, fo);
  const fs::path out = fs::path(cfg.output_dir) / ("fig" + std::to_string(fig)) / "comparison.json";
  write_json(to_json(rep, cfg), out);
  std::fprintf(stderr, "figure %d (%s) in %.1f s, comparison %s\n", fig, rep.spec.title.c_str(), seconds_since(t0),
               out.string().c_str());
  int worst = 0;
  for (const auto& sc : rep.scenarios) {
    std::printf("gamma = %g\n", sc.gamma);
    std::printf("  %-8s %14s %14s %14s %14s\n", rep.spec.param.c_str(), "W_a[local+J]", "W_b[local+J]",
                "W_a[local]", "W_b[local]");
    for (const auto& pa : sc.a) {
      const RunSummary* pb = detail::find_point(sc.b, pa.value);
      worst = std::max(worst, pa.exit_code);
      if (!pa.ok || !pb) {
        std::printf("  %-8g failed\n", pa.value);
        continue;
      }
      std::printf("  %-8g %14.6f %14.6f %14.6f %14.6f\n", pa.value,
                  pa.steady_local_plus_exchange.W_raw, pb->steady_local_plus_exchange.W_raw,
                  pa.steady_local.W_raw, pb->steady_local.W_raw);
    }
    for (const auto& pb : sc.b) worst = std::max(worst, pb.exit_code);
    for (const auto& v : sc.verdicts) {
      const json j = to_json(v);
      std::printf("  [%s] %s: %s\n", j["result"].get<std::string>().c_str(), v.id.c_str(), v.detail.c_str());
    }
  }
  return worst;
}

int cmd_spectrum(const CommonOptions& o, bool with_eigenvalues) {
  const auto [cfg, raw] = load(o);
  const auto t0 = std::chrono::steady_clock::now();
  const SpectrumReport rep = spectrum_report(cfg.model, cfg.dissipator);
  json j = to_json(rep, with_eigenvalues);
  j["defaults_version"] = kDefaultsVersion;
  j["config"] = cfg.effective;
  const fs::path out = fs::path(cfg.output_dir) / (cfg.output_prefix + "_spectrum.json");
  write_json(j, out);
  std::fprintf(stderr, "spectrum report %s (%.1f s)\n", out.string().c_str(), seconds_since(t0));
  for (const auto& c : rep.columns) {
    std::printf("%-22s lambda=%+.6f  gap %.6e  stationary %zu  slowest decaying ", c.label.c_str(), c.lambda,
                c.spectrum.gap, c.stationary);
    if (c.slowest_decaying) {
      std::printf("%.6e%+.6ei\n", c.slowest_decaying->real(), c.slowest_decaying->imag());
    } else {
      std::printf("none\n");
    }
  }
  std::printf("smallest |Re(slowest decaying)|: %s\n", rep.minimizer.empty() ? "n/a" : rep.minimizer.c_str());
  return 0;
}

int cmd_steady(const CommonOptions& o) {
  const auto [cfg, raw] = load(o);
  const json j = steady_state_report(cfg);
  const fs::path out = fs::path(cfg.output_dir) / (cfg.output_prefix + "_steady_state.json");
  write_json(j, out);
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  int failed = 0;
  for (const auto& c : selftest::run_all(seed)) {
    std::printf("%s  %s  (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.pass) ++failed;
  }
  std::printf("%d check(s) failed\n", failed);
  return failed ? 4 : 0;
}

int cmd_columns(const std::string& csv) {
  const std::string cols = kCsvColumns;
  std::printf("# gnuplot column mapping for qbattery CSV (comment lines start with '#')\n");
  std::printf("set datafile separator ','\nset key autotitle columnhead\n");
  std::size_t k = 1;
  std::size_t start = 0;
  std::vector<std::string> names;
  while (start <= cols.size()) {
    const auto comma = cols.find(',', start);
    names.push_back(cols.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (const auto& n : names) std::printf("# column %zu: %s\n", k++, n.c_str());
  for (std::size_t c = 2; c <= names.size(); ++c) {
    std::printf("# plot '%s' using 1:%zu with lines title '%s'\n", csv.c_str(), c, names[c - 1].c_str());
  }
  std::printf("plot '%s' using 1:2 with lines title 'W_raw', '' using 1:6 with lines title 'E_cat'\n", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catalytic quantum battery simulator"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* sim = app.add_subcommand("simulate", "propagate one configuration and write a CSV time series");
  add_common(sim, opts);
  auto* swp = app.add_subcommand("sweep", "run the configured sweep axis on a worker pool");
  add_common(swp, opts);
  auto* spc = app.add_subcommand("spectrum", "Liouvillian spectra for lambda = 0, -g/sqrt(N), 1.5");
  add_common(spc, opts);
  bool no_eigs = false;
  spc->add_flag("--no-eigenvalues", no_eigs, "omit the full eigenvalue table from the JSON");
  auto* sst = app.add_subcommand("steady-state", "exact null-space steady state of the configured model");
  add_common(sst, opts);
  auto* fig = app.add_subcommand("reproduce-fig", "paired lambda=0 / lambda=1.5 sweeps for one figure");
  add_common(fig, opts);
  int fig_number = 0;
  std::vector<double> gammas = {0.0, 0.01, 0.05};
  std::vector<double> values;
  fig->add_option("figure", fig_number, "figure number")->required()->check(CLI::Range(2, 5));
  fig->add_option("--gammas", gammas, "spin decay rates to report (ignored if gamma is set explicitly)");
  fig->add_option("--values", values, "replace the declared grid of the scanned parameter");
  auto* slf = app.add_subcommand("selftest", "run the built-in oracle checks");
  std::uint64_t seed = 20240917;
  slf->add_option("--seed", seed, "seed for the randomized checks");
  auto* col = app.add_subcommand("columns", "print gnuplot column mappings for the CSV schema");
  std::string csv_name = "run.csv";
  col->add_option("csv", csv_name, "CSV file name used in the emitted plot commands");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(opts);
    if (*swp) return cmd_sweep(opts);
    if (*spc) return cmd_spectrum(opts, !no_eigs);
    if (*sst) return cmd_steady(opts);
    if (*fig) return cmd_reproduce(opts, fig_number, gammas, values);
    if (*slf) return cmd_selftest(seed);
    if (*col) return cmd_columns(csv_name);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const PhysicsAbort& e) {
    std::fprintf(stderr, "physics abort at t = %g: %s\n", e.time(), e.what());
    return 3;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}

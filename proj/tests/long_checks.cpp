// Baseline-size convergence checks. Each case runs for a minute or more.

#include "qbattery/runner.hpp"

#include <catch_amalgamated.hpp>

#include <cstdio>

using namespace qbattery;

namespace {

struct Series {
  std::vector<double> t;
  std::vector<double> w_main;
  std::vector<double> w_other;
};

Series ergotropy_series(const ModelParams& p, const IntegratorConfig& ic, double t_end) {
  Series s;
  RowEvaluator eval(p, BatteryHamiltonianMode::local_plus_exchange);
  propagate_observed(build_initial_state(p, {}), build_master_equation(p), ic, t_end,
                     [&](double t, const DensityMatrix& rho, const StateDiagnostics& diag) {
                       const SnapshotRow r = eval.evaluate(t, rho, diag);
                       s.t.push_back(t);
                       s.w_main.push_back(r.W_raw);
                       s.w_other.push_back(eval.last_other_ergotropy());
                     });
  return s;
}

}  // namespace

TEST_CASE("step halving at the baseline", "[long]") {
  const ModelParams p;
  IntegratorConfig coarse;
  coarse.dt = 0.005;
  coarse.snapshot_stride = 100;
  IntegratorConfig fine = coarse;
  fine.dt = 0.0025;
  fine.snapshot_stride = 200;
  const Series a = ergotropy_series(p, coarse, 500.0);
  const Series b = ergotropy_series(p, fine, 500.0);
  REQUIRE(a.t.size() == b.t.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.t.size(); ++k) {
    REQUIRE(a.t[k] == b.t[k]);
    worst = std::max({worst, std::abs(a.w_main[k] - b.w_main[k]), std::abs(a.w_other[k] - b.w_other[k])});
  }
  std::printf("step halving: max |W(dt) - W(dt/2)| = %.3e over %zu snapshots\n", worst, a.t.size());
  CHECK(worst < 1e-5);
}

TEST_CASE("long-time propagation reaches the kernel steady state", "[long]") {
  // slowest baseline relaxation rate is about 1.07e-2, so t = 5000 leaves e^-53
  const ModelParams p;
  const MasterEquation eq = build_master_equation(p);
  const SteadyStateResult ss = steady_state(eq);
  REQUIRE(ss.state.has_value());
  IntegratorConfig ic;
  ic.dt = 0.02;
  ic.snapshot_stride = 250000;
  const Trajectory tr = propagate(build_initial_state(p, {}), eq, ic, 5000.0);
  const double dist = trace_distance(tr.states.back().matrix(), ss.state->matrix());
  std::printf("baseline steady state: trace distance to t=5000 propagation %.3e\n", dist);
  CHECK(dist < 1e-8);
  const double w_prop = battery_ergotropy(tr.states.back(), p, BatteryHamiltonianMode::local_plus_exchange).ergotropy;
  const double w_ss = battery_ergotropy(*ss.state, p, BatteryHamiltonianMode::local_plus_exchange).ergotropy;
  CHECK(std::abs(w_prop - w_ss) < 1e-8);
}

TEST_CASE("photon cutoff convergence of the baseline steady state", "[long]") {
  // cutoff 11 is the largest that fits the superoperator cap at N = 3
  std::vector<double> w;
  std::vector<double> n;
  for (int c = 5; c <= 11; ++c) {
    ModelParams p;
    p.photon_cutoff = c;
    const SteadyStateResult ss = steady_state(p);
    REQUIRE(ss.state.has_value());
    w.push_back(battery_ergotropy(*ss.state, p, BatteryHamiltonianMode::local_plus_exchange).ergotropy);
    n.push_back(subsystem_energy(*ss.state, Subsystem::cavity, p) / p.omega_c);
    std::printf("cutoff %2d: W_ss[local+J] %.6f  <n> %.6f\n", c, w.back(), n.back());
  }
  for (std::size_t k = 2; k < w.size(); ++k) {
    CHECK(std::abs(w[k] - w[k - 1]) < std::abs(w[k - 1] - w[k - 2]));
    CHECK(n[k] > n[k - 1]);
  }
  CHECK(std::abs(w.back() - w[w.size() - 2]) < 2e-3);
  std::printf("cutoff 5 bias against cutoff 11: %.3e\n", w.front() - w.back());
}

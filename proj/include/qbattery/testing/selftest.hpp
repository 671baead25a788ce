#pragma once

// Fast oracle suite behind `qbattery selftest`. Each check compares a library
// result with an independent computation from oracles.hpp.

#include "qbattery/evolve.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/model.hpp"
#include "qbattery/observables.hpp"
#include "qbattery/spectrum.hpp"
#include "qbattery/testing/oracles.hpp"

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace qbattery::selftest {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Single qubit, H = (omega/2) sigma_z, decay gamma D[sigma].
inline MasterEquation decaying_qubit(double gamma, double omega) {
  const HilbertSignature sig({2});
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = -0.5 * omega;
  h(1, 1) = 0.5 * omega;
  MasterEquation eq{Operator(h, sig), {}};
  if (gamma > 0.0) eq.terms.push_back(GeneratorTerm::from({sigma_lowering(), gamma}));
  return eq;
}

/// Isolated cavity (Fock levels 0..cutoff) with the thermal dissipator.
inline MasterEquation thermal_cavity(double omega_c, double kappa, double n, int cutoff, DissipatorMode mode) {
  const Operator a = annihilation(static_cast<std::size_t>(cutoff));
  MasterEquation eq{omega_c * (a.adjoint() * a), {}};
  if (mode == DissipatorMode::standard) {
    eq.terms.push_back({a, kappa * (n + 1.0), kappa * (n + 1.0)});
    eq.terms.push_back({a.adjoint(), kappa * n, kappa * n});
  } else {
    eq.terms.push_back({a, kappa * (n + 1.0), kappa * n});
  }
  return eq;
}

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
}  // namespace detail

inline std::vector<Check> run_all(std::uint64_t seed = 20240917) {
  using detail::sci;
  std::vector<Check> out;
  auto record = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };

  {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(1, 6);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Index n = dim(rng);
      const Matrix rho = oracle::random_density_matrix(n, rng);
      const Matrix h = oracle::random_hermitian(n, rng);
      worst = std::max(worst, std::abs(ergotropy(rho, h).ergotropy - oracle::brute_force_ergotropy(rho, h)));
    }
    record("ergotropy: sorted spectra vs permutation brute force (200 pairs)", worst < 1e-10, "max diff " + sci(worst));
  }
  {
    std::mt19937_64 rng(seed + 1);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Matrix h = oracle::random_hermitian(2 + k % 5, rng);
      worst = std::max(worst, std::abs(ergotropy(oracle::gibbs_state(h, 0.3 + 0.05 * k), h).ergotropy));
    }
    record("ergotropy: Gibbs states are passive", worst < 1e-12, "max |W| " + sci(worst));
    Matrix e = Matrix::Zero(2, 2);
    e(1, 1) = 1.0;
    Matrix h = Matrix::Zero(2, 2);
    h(1, 1) = 1.7;
    const double w = ergotropy(e, h).ergotropy;
    record("ergotropy: excited qubit gives Omega", w == 1.7, "W = " + sci(w));
  }
  {
    const double gamma = 0.1;
    const double omega = 1.3;
    const auto spec = liouvillian_spectrum(build_liouvillian(decaying_qubit(gamma, omega)));
    auto expect = oracle::decaying_qubit_spectrum(gamma, omega);
    double worst = 0.0;
    for (cplx z : expect) {
      double best = 1e300;
      for (cplx w : spec.eigenvalues) best = std::min(best, std::abs(z - w));
      worst = std::max(worst, best);
    }
    const bool ok = spec.eigenvalues.size() == 4 && worst < 1e-9 && std::abs(spectral_gap(spec) - gamma / 2) < 1e-9;
    record("spectrum: decaying qubit {0, -g, -g/2 +- i W} and gap g/2", ok, "max diff " + sci(worst));
  }
  {
    const double gamma = 0.1;
    MasterEquation eq = decaying_qubit(gamma, 1.0);
    Matrix e = Matrix::Zero(2, 2);
    e(1, 1) = 1.0;
    IntegratorConfig cfg;
    cfg.dt = 0.001;
    cfg.snapshot_stride = 1000;
    const auto traj = propagate(DensityMatrix::from_operator(Operator(e, eq.signature())), eq, cfg, 10.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      worst = std::max(worst, std::abs(traj.states[k].matrix()(1, 1).real() - std::exp(-gamma * traj.times[k])));
    }
    record("evolve: excited population follows exp(-gamma t)", worst < 1e-8, "max diff " + sci(worst));
  }
  {
    ModelParams p;
    p.N = 1;
    p.photon_cutoff = 1;
    const MasterEquation eq = build_master_equation(p);
    const Index d = eq.hamiltonian.dim();
    const Matrix ref = oracle::liouvillian_by_columns(d, [&](const Matrix& m) { return apply_generator(eq, m); });
    const double diff = (build_liouvillian(eq).dense() - ref).cwiseAbs().maxCoeff();
    record("lindblad: superoperator matches column-by-column matrix form", diff < 1e-12, "max diff " + sci(diff));
  }
  {
    const double n = thermal_occupation(0.5, 0.8, 1.0);
    const double kappa = 0.15;
    Matrix one = Matrix::Zero(11, 11);
    one(1, 1) = 1.0;
    const auto std_eq = thermal_cavity(0.5, kappa, n, 10, DissipatorMode::standard);
    const auto lit_eq = thermal_cavity(0.5, kappa, n, 10, DissipatorMode::paper_literal);
    const double tr_std = std::abs(apply_generator(std_eq, one).trace());
    const double tr_lit = apply_generator(lit_eq, one).trace().real();
    record("lindblad: standard thermal dissipator is traceless on |1><1|", tr_std < 1e-14, "trace " + sci(tr_std));
    record("lindblad: paper-literal form has trace derivative kappa on |1><1|", std::abs(tr_lit - kappa) < 1e-14,
           "trace " + sci(tr_lit));
    const auto ss = steady_state(std_eq);
    const auto pops = oracle::truncated_thermal_populations(0.5, 0.8, 1.0, 10);
    double worst = 0.0;
    for (std::size_t m = 0; m < pops.size(); ++m) {
      worst = std::max(worst, std::abs(ss.state->matrix()(static_cast<Index>(m), static_cast<Index>(m)).real() - pops[m]));
    }
    record("evolve: thermal cavity steady state equals truncated Bose-Einstein state", worst < 1e-10,
           "max diff " + sci(worst));
  }
  {
    double worst = 0.0;
    for (double lam : {-1.5, -0.1732, 0.0, 0.2, 1.5}) {
      ModelParams p;
      p.photon_cutoff = 2;
      p.lambda = lam;
      worst = std::max(worst, std::abs(quasi_dark_residual(p) - oracle::quasi_dark_residual_closed_form(p.g, lam, p.N)));
    }
    record("model: quasi-dark residual matches the hand-derived closed form", worst < 1e-12, "max diff " + sci(worst));
  }
  {
    ModelParams p;
    p.N = 2;
    p.photon_cutoff = 1;
    const MasterEquation eq = build_master_equation(p);
    const DensityMatrix rho0 = build_initial_state(p, {});
    IntegratorConfig rk;
    rk.snapshot_stride = 200;
    IntegratorConfig kr = rk;
    kr.method = IntegratorMethod::expm_krylov_reference;
    const auto a = propagate(rho0, eq, rk, 5.0);
    const auto b = propagate(rho0, eq, kr, 5.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
      worst = std::max(worst, (a.states[k].matrix() - b.states[k].matrix()).cwiseAbs().maxCoeff());
    }
    record("evolve: rk4 agrees with the Krylov exponential", worst < 1e-6, "max diff " + sci(worst));
  }
  {
    std::mt19937_64 rng(seed + 2);
    const HilbertSignature sig({2, 3, 2});
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto rho = DensityMatrix::unchecked(oracle::random_density_matrix(12, rng), sig);
      const auto r1 = partial_trace(partial_trace(rho, {0, 1}), {0});
      const auto r2 = partial_trace(rho, {0});
      worst = std::max(worst, (r1.matrix() - r2.matrix()).cwiseAbs().maxCoeff());
    }
    record("observables: partial traces compose", worst < 1e-14, "max diff " + sci(worst));
  }
  return out;
}

}  // namespace qbattery::selftest

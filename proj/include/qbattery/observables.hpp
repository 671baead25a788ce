#pragma once

// Figures of merit extracted from density matrices.

#include "qbattery/hilbert.hpp"
#include "qbattery/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

namespace qbattery {

/// Reduced state on the subsystems in `keep` (kept in their original order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<std::size_t> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  const HilbertSignature& sig = rho.signature();
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.back() >= sig.size()) throw std::invalid_argument("partial_trace: subsystem index out of range");

  std::vector<bool> kept(sig.size(), false);
  for (auto k : keep) kept[k] = true;
  const HilbertSignature out_sig = sig.select(keep);
  if (keep.size() == sig.size()) return rho;

  // For every composite index: position inside the kept factor and inside the traced factor.
  const std::size_t d = sig.total();
  std::size_t traced_dim = 1;
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (!kept[k]) traced_dim *= sig[k];
  }
  std::vector<std::vector<std::pair<Index, Index>>> groups(traced_dim);
  for (std::size_t i = 0; i < d; ++i) {
    const auto digits = basis_digits(i, sig);
    std::size_t ki = 0;
    std::size_t ti = 0;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      if (kept[k]) {
        ki = ki * sig[k] + digits[k];
      } else {
        ti = ti * sig[k] + digits[k];
      }
    }
    groups[ti].emplace_back(static_cast<Index>(i), static_cast<Index>(ki));
  }
  const auto dk = static_cast<Index>(out_sig.total());
  Matrix out = Matrix::Zero(dk, dk);
  const Matrix& m = rho.matrix();
  for (const auto& g : groups) {
    for (const auto& [c, kc] : g) {
      for (const auto& [r, kr] : g) out(kr, kc) += m(r, c);
    }
  }
  return DensityMatrix::unchecked(std::move(out), out_sig);
}

inline std::vector<std::size_t> battery_sites(const ModelParams& p) {
  std::vector<std::size_t> s;
  for (int i = 0; i < p.N; ++i) s.push_back(site::spin(i));
  return s;
}

enum class BatteryHamiltonianMode { local_only, local_plus_exchange };

inline const char* to_string(BatteryHamiltonianMode m) {
  return m == BatteryHamiltonianMode::local_only ? "local" : "local+J";
}

/// Battery Hamiltonian on the N-spin space: Omega_a sum_i sigma_i^dag sigma_i,
/// plus the open-chain exchange when `mode` includes it.
inline Operator battery_hamiltonian(const ModelParams& p, BatteryHamiltonianMode mode) {
  p.validate();
  const HilbertSignature sig(std::vector<std::size_t>(static_cast<std::size_t>(p.N), 2));
  const Operator s = sigma_lowering();
  Operator h = Operator::zero(sig);
  std::vector<Operator> low;
  for (int i = 0; i < p.N; ++i) low.push_back(embed(s, static_cast<std::size_t>(i), sig));
  for (const auto& l : low) h += p.omega_a * (l.adjoint() * l);
  if (mode == BatteryHamiltonianMode::local_plus_exchange) {
    for (int i = 0; i + 1 < p.N; ++i) {
      const Operator hop = low[static_cast<std::size_t>(i)].adjoint() * low[static_cast<std::size_t>(i) + 1];
      h += p.J * (hop + hop.adjoint());
    }
  }
  return h;
}

struct ErgotropyReport {
  double energy = 0.0;          // Tr[rho H]
  double passive_energy = 0.0;  // sum_k r_k (descending) eps_k (ascending)
  double ergotropy = 0.0;
  std::vector<double> eigen_occupations;  // descending
  std::vector<double> eigen_energies;     // ascending
};

/// Ergotropy through the passive-state construction: pair the state's
/// eigenvalues in descending order with the Hamiltonian's in ascending order.
inline ErgotropyReport ergotropy(const Matrix& rho, const Matrix& h, double herm_tol = 1e-9) {
  if (rho.rows() != h.rows() || rho.rows() != rho.cols() || h.rows() != h.cols()) {
    throw std::invalid_argument("ergotropy: state and Hamiltonian dimensions differ");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol) {
    throw std::invalid_argument("ergotropy: state is not Hermitian");
  }
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > herm_tol) {
    throw std::invalid_argument("ergotropy: Hamiltonian is not Hermitian");
  }
  const Matrix rh = 0.5 * (rho + rho.adjoint());
  const Matrix hh = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es_r(rh, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> es_h(hh, Eigen::EigenvaluesOnly);
  ErgotropyReport rep;
  const Index n = rho.rows();
  rep.eigen_occupations.resize(static_cast<std::size_t>(n));
  rep.eigen_energies.resize(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    rep.eigen_occupations[static_cast<std::size_t>(k)] = es_r.eigenvalues()(n - 1 - k);
    rep.eigen_energies[static_cast<std::size_t>(k)] = es_h.eigenvalues()(k);
  }
  rep.energy = (rh.cwiseProduct(hh.transpose())).sum().real();
  for (std::size_t k = 0; k < rep.eigen_energies.size(); ++k) {
    rep.passive_energy += rep.eigen_occupations[k] * rep.eigen_energies[k];
  }
  rep.ergotropy = rep.energy - rep.passive_energy;
  return rep;
}

inline ErgotropyReport ergotropy(const DensityMatrix& rho, const Operator& h) {
  if (!(rho.signature() == h.signature())) {
    throw std::invalid_argument("ergotropy: signature mismatch");
  }
  return ergotropy(rho.matrix(), h.matrix());
}

/// Battery ergotropy of a full-system state.
inline ErgotropyReport battery_ergotropy(const DensityMatrix& rho, const ModelParams& p,
                                         BatteryHamiltonianMode mode) {
  return ergotropy(partial_trace(rho, battery_sites(p)), battery_hamiltonian(p, mode));
}

enum class Subsystem { battery, catalyst, cavity };

inline double subsystem_energy(const DensityMatrix& rho, Subsystem which, const ModelParams& p,
                               BatteryHamiltonianMode mode = BatteryHamiltonianMode::local_plus_exchange) {
  switch (which) {
    case Subsystem::battery: {
      const DensityMatrix rb = partial_trace(rho, battery_sites(p));
      const Matrix h = battery_hamiltonian(p, mode).matrix();
      return (rb.matrix().cwiseProduct(h.transpose())).sum().real();
    }
    case Subsystem::catalyst: {
      const DensityMatrix rc = partial_trace(rho, {site::catalyst(p)});
      return 0.5 * p.omega_cat * (rc.matrix()(1, 1) - rc.matrix()(0, 0)).real();
    }
    case Subsystem::cavity: {
      const DensityMatrix rc = partial_trace(rho, {site::cavity});
      double e = 0.0;
      for (Index m = 0; m < rc.dim(); ++m) e += static_cast<double>(m) * rc.matrix()(m, m).real();
      return p.omega_c * e;
    }
  }
  return 0.0;
}

/// <psi_QD| rho |psi_QD>.
inline double dark_state_overlap(const DensityMatrix& rho, const StateVector& psi) {
  if (!(rho.signature() == psi.signature())) {
    throw std::invalid_argument("dark_state_overlap: signature mismatch");
  }
  const Vector& v = psi.amplitudes();
  return v.dot(rho.matrix() * v).real();
}

inline double dark_state_overlap(const DensityMatrix& rho, const ModelParams& p) {
  return dark_state_overlap(rho, quasi_dark_state(p));
}

/// Tr[rho^2].
inline double purity(const DensityMatrix& rho) {
  const Matrix& m = rho.matrix();
  return m.cwiseProduct(m.transpose()).sum().real();
}

/// (1/2) || a - b ||_1 for Hermitian arguments.
inline double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix diff = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qbattery

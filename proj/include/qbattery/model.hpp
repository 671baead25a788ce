#pragma once

// Hamiltonian of the spin-chain battery + lossy cavity + catalyst qubit, and
// the collective-mode objects used to analyse the interference mechanism.

#include "qbattery/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbattery {

/// Physical parameters (hbar = 1). Defaults are the catalyst-assisted
/// baseline: N = 3, Omega_c = 0.5, Omega_a = 2.0, Omega_cat = 0.06, k_B = 1,
/// g = 0.3, J = 1.6, kappa = 0.15, T = 0.8, lambda = 1.5.
struct ModelParams {
  int N = 3;
  double omega_c = 0.5;
  double omega_a = 2.0;
  double omega_cat = 0.06;
  double J = 1.6;
  double g = 0.3;
  double lambda = 1.5;  // signed; the relative sign to g sets the interference phase
  double kappa = 0.15;
  double gamma = 0.01;
  std::vector<double> gamma_per_spin;  // optional override, length N
  double T = 0.8;
  double k_B = 1.0;
  int photon_cutoff = 5;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("ModelParams." + field + ": " + why);
    };
    auto finite = [&](double v, const char* field) {
      if (!std::isfinite(v)) fail(field, "must be finite");
    };
    if (N < 1) fail("N", "must be >= 1");
    if (photon_cutoff < 1) fail("photon_cutoff", "must be >= 1");
    for (auto [v, name] : {std::pair{omega_c, "omega_c"}, std::pair{omega_a, "omega_a"},
                           std::pair{omega_cat, "omega_cat"}, std::pair{kappa, "kappa"},
                           std::pair{gamma, "gamma"}, std::pair{T, "T"},
                           std::pair{k_B, "k_B"}}) {
      finite(v, name);
      if (v < 0.0) fail(name, "must be >= 0");
    }
    finite(J, "J");
    finite(g, "g");
    finite(lambda, "lambda");
    if (!gamma_per_spin.empty()) {
      if (gamma_per_spin.size() != static_cast<std::size_t>(N)) {
        fail("gamma_per_spin", "length must equal N");
      }
      for (double v : gamma_per_spin) {
        if (!(v >= 0.0) || !std::isfinite(v)) fail("gamma_per_spin", "entries must be >= 0");
      }
    }
  }

  double spin_gamma(int i) const {
    return gamma_per_spin.empty() ? gamma : gamma_per_spin.at(static_cast<std::size_t>(i));
  }
};

/// Subsystem positions in the composite ordering [cavity, spins..., catalyst].
namespace site {
inline constexpr std::size_t cavity = 0;
inline std::size_t spin(int i) { return 1 + static_cast<std::size_t>(i); }
inline std::size_t catalyst(const ModelParams& p) { return 1 + static_cast<std::size_t>(p.N); }
}  // namespace site

inline HilbertSignature signature(const ModelParams& p,
                                  std::size_t cap = kDefaultDimensionCap) {
  p.validate();
  std::vector<std::size_t> dims;
  dims.push_back(static_cast<std::size_t>(p.photon_cutoff) + 1);
  for (int i = 0; i < p.N; ++i) dims.push_back(2);
  dims.push_back(2);
  return HilbertSignature(std::move(dims), cap);
}

inline Operator cavity_annihilation(const ModelParams& p) {
  return embed(annihilation(static_cast<std::size_t>(p.photon_cutoff)), site::cavity,
               signature(p));
}

inline Operator spin_lowering(const ModelParams& p, int i) {
  if (i < 0 || i >= p.N) throw std::invalid_argument("spin_lowering: spin index out of range");
  return embed(sigma_lowering(), site::spin(i), signature(p));
}

inline Operator catalyst_lowering(const ModelParams& p) {
  return embed(sigma_lowering(), site::catalyst(p), signature(p));
}

/// sigma_z of the catalyst, diag(-1, +1) in the ground-first basis.
inline Operator catalyst_sigma_z(const ModelParams& p) {
  const Operator s = catalyst_lowering(p);
  return s.adjoint() * s - s * s.adjoint();
}

/// a^dag a + sum_i sigma_i^dag sigma_i + sigma_+^cat sigma_-^cat.
inline Operator excitation_number(const ModelParams& p) {
  const Operator a = cavity_annihilation(p);
  Operator n = a.adjoint() * a;
  for (int i = 0; i < p.N; ++i) {
    const Operator s = spin_lowering(p, i);
    n += s.adjoint() * s;
  }
  const Operator c = catalyst_lowering(p);
  return n + c.adjoint() * c;
}

/// Free part: Omega_c a^dag a + Omega_a sum_i sigma_i^dag sigma_i + (Omega_cat/2) sigma_z^cat.
inline Operator build_h0(const ModelParams& p) {
  const Operator a = cavity_annihilation(p);
  Operator h = p.omega_c * (a.adjoint() * a);
  for (int i = 0; i < p.N; ++i) {
    const Operator s = spin_lowering(p, i);
    h += p.omega_a * (s.adjoint() * s);
  }
  return h + (0.5 * p.omega_cat) * catalyst_sigma_z(p);
}

/// J sum_{i<N} (sigma_i^dag sigma_{i+1} + h.c.), open chain.
inline Operator exchange_term(const ModelParams& p) {
  Operator h = Operator::zero(signature(p));
  for (int i = 0; i + 1 < p.N; ++i) {
    const Operator hop = spin_lowering(p, i).adjoint() * spin_lowering(p, i + 1);
    h += p.J * (hop + hop.adjoint());
  }
  return h;
}

/// Exchange + cavity-spin + catalyst-spin couplings (rotating-wave form).
inline Operator build_hint(const ModelParams& p) {
  const Operator a = cavity_annihilation(p);
  const Operator c = catalyst_lowering(p);
  Operator h = exchange_term(p);
  for (int i = 0; i < p.N; ++i) {
    const Operator s = spin_lowering(p, i);
    const Operator cav = a.adjoint() * s;
    const Operator cat = c.adjoint() * s;
    h += p.g * (cav + cav.adjoint());
    h += p.lambda * (cat + cat.adjoint());
  }
  return h;
}

inline Operator build_hamiltonian(const ModelParams& p) { return build_h0(p) + build_hint(p); }

/// S^- = N^{-1/2} sum_i sigma_i^-.
inline Operator collective_lowering(const ModelParams& p) {
  Operator s = Operator::zero(signature(p));
  for (int i = 0; i < p.N; ++i) s += spin_lowering(p, i);
  return (1.0 / std::sqrt(static_cast<double>(p.N))) * s;
}

/// sqrt(N) g (a^dag S^- + a S^+) + sqrt(N) lambda (sigma_+^cat S^- + sigma_-^cat S^+).
/// Equals build_hint(p) - exchange_term(p).
inline Operator collective_hint(const ModelParams& p) {
  const double rn = std::sqrt(static_cast<double>(p.N));
  const Operator a = cavity_annihilation(p);
  const Operator c = catalyst_lowering(p);
  const Operator sm = collective_lowering(p);
  const Operator cav = a.adjoint() * sm;
  const Operator cat = c.adjoint() * sm;
  return (rn * p.g) * (cav + cav.adjoint()) + (rn * p.lambda) * (cat + cat.adjoint());
}

/// Amplitude-matching catalyst coupling lambda* = -g / sqrt(N).
inline double interference_lambda(double g, int N) {
  if (N < 1) throw std::invalid_argument("interference_lambda: N must be >= 1");
  return -g / std::sqrt(static_cast<double>(N));
}

/// Basis index of |m photons; spin occupations; catalyst occupation>.
inline std::size_t model_basis_index(const ModelParams& p, std::size_t photons,
                                     const std::vector<int>& spins_excited, int catalyst_excited) {
  const HilbertSignature sig = signature(p);
  std::vector<std::size_t> digits(sig.size(), 0);
  digits[site::cavity] = photons;
  for (int i = 0; i < p.N; ++i) digits[site::spin(i)] = static_cast<std::size_t>(spins_excited.at(i));
  digits[site::catalyst(p)] = static_cast<std::size_t>(catalyst_excited);
  return basis_index(digits, sig);
}

/// (sqrt(N) lambda |W, cat g> - g |0_spin, cat e>) (x) |0_cav>, normalized.
/// |W> is the symmetric single-excitation spin state.
inline StateVector quasi_dark_state(const ModelParams& p) {
  const double nn = static_cast<double>(p.N);
  const double norm2 = nn * p.lambda * p.lambda + p.g * p.g;
  if (!(norm2 > 0.0)) {
    throw std::invalid_argument("quasi_dark_state: N lambda^2 + g^2 = 0, state undefined");
  }
  const HilbertSignature sig = signature(p);
  Vector v = Vector::Zero(static_cast<Index>(sig.total()));
  // sqrt(N) lambda times the 1/sqrt(N) weight of each W-state component
  const double spin_amp = p.lambda;
  std::vector<int> occ(static_cast<std::size_t>(p.N), 0);
  for (int i = 0; i < p.N; ++i) {
    occ.assign(static_cast<std::size_t>(p.N), 0);
    occ[static_cast<std::size_t>(i)] = 1;
    v(static_cast<Index>(model_basis_index(p, 0, occ, 0))) += spin_amp;
  }
  occ.assign(static_cast<std::size_t>(p.N), 0);
  v(static_cast<Index>(model_basis_index(p, 0, occ, 1))) += -p.g;
  return StateVector(std::move(v), sig);
}

/// Orthogonal projector onto cavity photon number >= 1.
inline Operator photon_sector_projector(const ModelParams& p) {
  const Operator a = cavity_annihilation(p);
  const Matrix n = (a.adjoint() * a).matrix();
  const Index d = n.rows();
  Matrix proj = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    if (std::real(n(k, k)) > 0.5) proj(k, k) = 1.0;
  }
  return Operator(std::move(proj), a.signature());
}

/// || P_{n_cav >= 1} H_int |psi_QD> ||: how far the quasi-dark state is from
/// being decoupled from the cavity.
inline double quasi_dark_residual(const ModelParams& p) {
  const StateVector psi = quasi_dark_state(p);
  const Operator hint = build_hint(p);
  const Vector out = photon_sector_projector(p).matrix() * (hint.matrix() * psi.amplitudes());
  return out.norm();
}

}  // namespace qbattery

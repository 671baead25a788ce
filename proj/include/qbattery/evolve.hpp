#pragma once

// Time propagation of the density matrix and steady-state extraction.

#include "qbattery/errors.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/spectrum.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbattery {

enum class IntegratorMethod { rk4_fixed, expm_krylov_reference };

inline const char* to_string(IntegratorMethod m) {
  return m == IntegratorMethod::rk4_fixed ? "rk4" : "expm-krylov";
}

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk4_fixed;
  double dt = 0.005;
  std::size_t snapshot_stride = 100;
  bool renormalize = false;
  double trace_abort_tol = 1e-6;
  double krylov_tol = 1e-13;
  std::size_t krylov_dim = 40;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("IntegratorConfig.dt must be > 0");
    if (snapshot_stride == 0) throw std::invalid_argument("IntegratorConfig.snapshot_stride must be > 0");
  }
};

/// Product initial state cavity (x) spins (x) catalyst.
struct InitialStateSpec {
  enum class Cavity { vacuum, fock, thermal };

  std::vector<int> battery;  // per-spin occupation, 1 = excited; empty means all excited
  Cavity cavity = Cavity::vacuum;
  int fock = 0;
  // Catalyst Bloch vector with sigma_z = diag(-1, +1): (0,0,-1) ground, (0,0,1)
  // excited, (1,0,0) the equal superposition (|g> + |e>)/sqrt(2).
  std::array<double, 3> catalyst_bloch{1.0, 0.0, 0.0};
};

inline DensityMatrix build_initial_state(const ModelParams& p, const InitialStateSpec& s) {
  p.validate();
  const auto dc = static_cast<Index>(p.photon_cutoff + 1);
  Matrix cav = Matrix::Zero(dc, dc);
  switch (s.cavity) {
    case InitialStateSpec::Cavity::vacuum:
      cav(0, 0) = 1.0;
      break;
    case InitialStateSpec::Cavity::fock:
      if (s.fock < 0 || s.fock > p.photon_cutoff) {
        throw std::invalid_argument("initial_state: Fock level outside [0, photon_cutoff]");
      }
      cav(s.fock, s.fock) = 1.0;
      break;
    case InitialStateSpec::Cavity::thermal: {
      double z = 0.0;
      for (Index m = 0; m < dc; ++m) {
        const double w = p.T > 0.0 ? std::exp(-static_cast<double>(m) * p.omega_c / (p.k_B * p.T))
                                   : (m == 0 ? 1.0 : 0.0);
        cav(m, m) = w;
        z += w;
      }
      cav /= z;
      break;
    }
  }
  std::vector<Operator> factors;
  factors.emplace_back(cav, HilbertSignature({static_cast<std::size_t>(dc)}));
  if (!s.battery.empty() && s.battery.size() != static_cast<std::size_t>(p.N)) {
    throw std::invalid_argument("initial_state: battery occupation list must have N entries");
  }
  for (int i = 0; i < p.N; ++i) {
    const int occ = s.battery.empty() ? 1 : s.battery[static_cast<std::size_t>(i)];
    if (occ != 0 && occ != 1) throw std::invalid_argument("initial_state: spin occupation must be 0 or 1");
    Matrix sp = Matrix::Zero(2, 2);
    sp(occ, occ) = 1.0;
    factors.emplace_back(sp, HilbertSignature({2}));
  }
  const auto [x, y, z] = s.catalyst_bloch;
  if (x * x + y * y + z * z > 1.0 + 1e-12) {
    throw std::invalid_argument("initial_state: catalyst Bloch vector longer than 1");
  }
  Matrix cat(2, 2);
  cat(0, 0) = 0.5 * (1.0 - z);
  cat(1, 1) = 0.5 * (1.0 + z);
  cat(0, 1) = cplx(0.5 * x, -0.5 * y);
  cat(1, 0) = cplx(0.5 * x, 0.5 * y);
  factors.emplace_back(cat, HilbertSignature({2}));
  const Operator rho = tensor(std::span<const Operator>(factors));
  return DensityMatrix::from_operator(Operator(rho.matrix(), signature(p)), 1e-10);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<StateDiagnostics> diagnostics;
};

using SnapshotObserver =
    std::function<void(double t, const DensityMatrix& rho, const StateDiagnostics& diag)>;

namespace detail {

inline std::size_t step_count(double t_end, double dt) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("propagate: t_end must be > 0");
  const double ratio = t_end / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(static_cast<double>(n) - ratio) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("propagate: t_end must be a positive multiple of dt");
  }
  return n;
}

inline void check_finite(const Matrix& rho, double t) {
  if (!rho.allFinite()) throw PhysicsAbort(t, "non-finite density matrix entries at t = " + std::to_string(t));
}

/// w <- exp(t L) w by Krylov projection with adaptive substeps.
class KrylovPropagator {
 public:
  KrylovPropagator(const SuperOperator& L, std::size_t m, double tol)
      : l_(L.matrix()), m_(static_cast<Index>(m)), tol_(tol) {
    // 1-norm of the sparse generator bounds the initial substep
    double nrm = 0.0;
    for (Index c = 0; c < l_.outerSize(); ++c) {
      double s = 0.0;
      for (SuperOperator::Sparse::InnerIterator it(l_, c); it; ++it) s += std::abs(it.value());
      nrm = std::max(nrm, s);
    }
    h_ = nrm > 0.0 ? 4.0 / nrm : 1.0;
  }

  void advance(Vector& w, double t) {
    double done = 0.0;
    while (done < t) {
      const double beta = w.norm();
      if (beta == 0.0) return;
      const Index n = w.size();
      const Index m = std::min<Index>(m_, n);
      Matrix V(n, m + 1);
      Matrix H = Matrix::Zero(m + 1, m + 1);
      V.col(0) = w / beta;
      Index built = m;
      double breakdown = 0.0;
      for (Index j = 0; j < m; ++j) {
        Vector v = l_ * V.col(j);
        for (int pass = 0; pass < 2; ++pass) {
          for (Index i = 0; i <= j; ++i) {
            const cplx h = V.col(i).dot(v);
            H(i, j) += h;
            v -= h * V.col(i);
          }
        }
        const double hn = v.norm();
        if (hn < 1e-12 * beta) {
          built = j + 1;
          breakdown = 0.0;
          break;
        }
        H(j + 1, j) = hn;
        breakdown = hn;
        V.col(j + 1) = v / hn;
      }
      while (true) {
        const double step = std::min(h_, t - done);
        const Matrix e = (step * H.topLeftCorner(built, built)).exp();
        const double err = beta * breakdown * std::abs(e(built - 1, 0));
        if (built < m || err <= tol_ * beta) {
          w = beta * (V.leftCols(built) * e.col(0));
          done += step;
          if (err < 0.01 * tol_ * beta) h_ *= 1.5;
          break;
        }
        h_ *= 0.5;
      }
    }
  }

 private:
  const SuperOperator::Sparse& l_;
  Index m_;
  double tol_;
  double h_;
};

}  // namespace detail

/// Propagates rho0 under `eq` up to t_end, calling `observer` at t = 0, at
/// every `snapshot_stride` steps and at t_end.
inline void propagate_observed(const DensityMatrix& rho0, const MasterEquation& eq,
                               const IntegratorConfig& cfg, double t_end,
                               const SnapshotObserver& observer) {
  cfg.validate();
  if (!(rho0.signature() == eq.signature())) {
    throw std::invalid_argument("propagate: state and generator signatures differ");
  }
  const auto pre = rho0.diagnostics();
  if (pre.trace_error > 1e-10 || pre.hermiticity_error > 1e-10 || pre.min_eigenvalue < -1e-10) {
    throw std::invalid_argument("propagate: initial state is not a valid density matrix");
  }
  const std::size_t steps = detail::step_count(t_end, cfg.dt);
  const bool conserving = eq.trace_preserving();
  const HilbertSignature& sig = rho0.signature();
  const Index d = rho0.dim();

  Matrix rho = rho0.matrix();
  auto emit = [&](std::size_t step) {
    const double t = static_cast<double>(step) * cfg.dt;
    detail::check_finite(rho, t);
    if (cfg.renormalize) rho /= rho.trace();
    const DensityMatrix snap = DensityMatrix::unchecked(rho, sig);
    const auto diag = snap.diagnostics();
    if (conserving && diag.trace_error > cfg.trace_abort_tol) {
      throw PhysicsAbort(t, "trace error " + std::to_string(diag.trace_error) + " at t = " + std::to_string(t));
    }
    observer(t, snap, diag);
  };
  emit(0);

  if (cfg.method == IntegratorMethod::rk4_fixed) {
    const CompiledGenerator gen(eq);
    Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage(d, d);
    const double h = cfg.dt;
    for (std::size_t s = 1; s <= steps; ++s) {
      gen.apply_hermitian(rho, k1);
      stage = rho + (0.5 * h) * k1;
      gen.apply_hermitian(stage, k2);
      stage = rho + (0.5 * h) * k2;
      gen.apply_hermitian(stage, k3);
      stage = rho + h * k3;
      gen.apply_hermitian(stage, k4);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const cplx tr = rho.trace();
      if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag())) {
        throw PhysicsAbort(static_cast<double>(s) * h, "non-finite state at t = " + std::to_string(static_cast<double>(s) * h));
      }
      if (conserving && std::abs(tr - 1.0) > cfg.trace_abort_tol) {
        const double t = static_cast<double>(s) * h;
        throw PhysicsAbort(t, "trace error " + std::to_string(std::abs(tr - 1.0)) + " at t = " + std::to_string(t));
      }
      if (s % cfg.snapshot_stride == 0 || s == steps) emit(s);
    }
  } else {
    const SuperOperator L = build_liouvillian(eq);
    detail::KrylovPropagator prop(L, cfg.krylov_dim, cfg.krylov_tol);
    Vector w = vec(rho);
    std::size_t s = 0;
    while (s < steps) {
      const std::size_t next = std::min(steps, s + cfg.snapshot_stride);
      // interval length from integer step counts keeps snapshot times identical to rk4
      prop.advance(w, static_cast<double>(next - s) * cfg.dt);
      rho = unvec(w, d);
      s = next;
      emit(s);
      if (cfg.renormalize) w = vec(rho);
    }
  }
}

inline Trajectory propagate(const DensityMatrix& rho0, const MasterEquation& eq,
                            const IntegratorConfig& cfg, double t_end) {
  Trajectory traj;
  propagate_observed(rho0, eq, cfg, t_end,
                     [&](double t, const DensityMatrix& rho, const StateDiagnostics& diag) {
                       traj.times.push_back(t);
                       traj.states.push_back(rho);
                       traj.diagnostics.push_back(diag);
                     });
  return traj;
}

inline Trajectory propagate(const DensityMatrix& rho0, const ModelParams& p,
                            const IntegratorConfig& cfg, double t_end,
                            DissipatorMode mode = DissipatorMode::standard) {
  return propagate(rho0, build_master_equation(p, mode), cfg, t_end);
}

struct SteadyStateResult {
  std::optional<DensityMatrix> state;  // set when the stationary manifold is one-dimensional
  std::vector<Matrix> manifold;        // basis of stationary states, trace-normalized where possible
  bool degenerate = false;
  double residual = 0.0;               // ||L vec(rho_ss)||
  double min_eigenvalue = 0.0;
};

struct SteadyStateOptions {
  double null_tol = 1e-10;  // singular values below null_tol * max(1, sigma_max) span the kernel
  std::size_t dense_block_cap = 4096;
};

/// Null space of the generator restricted to the irreducible blocks that carry
/// populations (diagonal entries of rho).
inline SteadyStateResult steady_state(const MasterEquation& eq, const SteadyStateOptions& opts = {}) {
  if (!eq.trace_preserving()) {
    throw std::invalid_argument("steady_state: requires a trace-preserving (standard-mode) generator");
  }
  const SuperOperator L = build_liouvillian(eq);
  const Index d = L.hilbert_dim();
  const Index d2 = L.dim();
  std::vector<Vector> kernel;
  for (const auto& idx : irreducible_blocks(L.matrix())) {
    const bool has_population = std::any_of(idx.begin(), idx.end(), [d](Index i) { return i % (d + 1) == 0; });
    if (!has_population) continue;
    const Index n = static_cast<Index>(idx.size());
    if (idx.size() <= opts.dense_block_cap) {
      const Matrix b = detail::dense_block(L.matrix(), idx);
      Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double thresh = opts.null_tol * std::max(1.0, sv(0));
      for (Index k = 0; k < n; ++k) {
        if (sv(k) > thresh) continue;
        Vector full = Vector::Zero(d2);
        for (Index r = 0; r < n; ++r) full(idx[static_cast<std::size_t>(r)]) = svd.matrixV()(r, k);
        kernel.push_back(std::move(full));
      }
    } else {
      SpectrumOptions so;
      so.shift = 1e-6;
      auto modes = detail::shift_invert_modes(detail::sparse_block(L.matrix(), idx), 4, so);
      for (std::size_t k = 0; k < modes.values.size(); ++k) {
        if (std::abs(modes.values[k]) > 1e-10) continue;
        Vector full = Vector::Zero(d2);
        for (Index r = 0; r < n; ++r) full(idx[static_cast<std::size_t>(r)]) = modes.vectors[k](r);
        kernel.push_back(std::move(full));
      }
    }
  }
  if (kernel.empty()) throw SolverError("steady_state: no stationary state found");

  SteadyStateResult res;
  for (const auto& v : kernel) {
    Matrix m = unvec(v, d);
    const cplx tr = m.trace();
    if (std::abs(tr) > 1e-12) {
      m /= tr;
      m = 0.5 * (m + m.adjoint());
    }
    res.manifold.push_back(std::move(m));
  }
  res.degenerate = res.manifold.size() > 1;
  if (!res.degenerate) {
    const Matrix& rho = res.manifold.front();
    res.residual = L.apply(vec(rho)).norm();
    const DensityMatrix dm = DensityMatrix::unchecked(rho, eq.signature());
    res.min_eigenvalue = dm.diagnostics().min_eigenvalue;
    if (res.residual > 1e-9) {
      throw SolverError("steady_state: residual " + std::to_string(res.residual) + " exceeds 1e-9");
    }
    if (res.min_eigenvalue < -1e-9) {
      throw SolverError("steady_state: negative eigenvalue " + std::to_string(res.min_eigenvalue));
    }
    res.state = dm;
  }
  return res;
}

inline SteadyStateResult steady_state(const ModelParams& p, const SteadyStateOptions& opts = {}) {
  return steady_state(build_master_equation(p, DissipatorMode::standard), opts);
}

}  // namespace qbattery

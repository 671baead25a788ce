#pragma once

// Lindblad generator of the battery model in three interchangeable forms:
//   * apply_generator     dense matrix-form reference, rho -> L(rho);
//   * CompiledGenerator   sparse matrix-form used by the integrators;
//   * SuperOperator       column-stacked d^2 x d^2 matrix, vec(A rho B) = (B^T (x) A) vec(rho).

#include "qbattery/hilbert.hpp"
#include "qbattery/model.hpp"

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qbattery {

/// Bose-Einstein occupation 1 / (exp(omega_c / (k_B T)) - 1); exactly 0 at T = 0.
inline double thermal_occupation(double omega_c, double T, double k_B) {
  if (!(omega_c > 0.0)) throw std::invalid_argument("thermal_occupation: omega_c must be > 0");
  if (!(k_B > 0.0)) throw std::invalid_argument("thermal_occupation: k_B must be > 0");
  if (T < 0.0) throw std::invalid_argument("thermal_occupation: T must be >= 0");
  if (T == 0.0) return 0.0;
  return 1.0 / std::expm1(omega_c / (k_B * T));
}

enum class DissipatorMode {
  standard,       // kappa (n+1) D[a] + kappa n D[a^dag]
  paper_literal,  // kappa [(n+1) a rho a^dag - n/2 {a^dag a, rho}], not trace preserving
};

inline const char* to_string(DissipatorMode m) {
  return m == DissipatorMode::standard ? "standard" : "paper-literal";
}

/// rate * D[jump].
struct DissipatorSpec {
  DissipatorSpec(Operator jump, double r) : jump_operator(std::move(jump)), rate(r) {
    if (!(rate >= 0.0)) throw std::invalid_argument("DissipatorSpec: rate must be >= 0");
  }
  Operator jump_operator;
  double rate;
};

/// sandwich_rate * L rho L^dag - (anticommutator_rate / 2) {L^dag L, rho}.
/// A proper dissipator has both rates equal.
struct GeneratorTerm {
  Operator jump;
  double sandwich_rate;
  double anticommutator_rate;

  static GeneratorTerm from(const DissipatorSpec& d) {
    return {d.jump_operator, d.rate, d.rate};
  }
};

struct MasterEquation {
  Operator hamiltonian;
  std::vector<GeneratorTerm> terms;

  bool trace_preserving() const {
    for (const auto& t : terms) {
      if (t.sandwich_rate != t.anticommutator_rate) return false;
    }
    return true;
  }
  const HilbertSignature& signature() const { return hamiltonian.signature(); }
};

/// D[L] rho = L rho L^dag - 1/2 (L^dag L rho + rho L^dag L).
inline Operator standard_dissipator(const Operator& L, const DensityMatrix& rho) {
  if (!(L.signature() == rho.signature())) {
    throw std::invalid_argument("standard_dissipator: signature " + L.signature().to_string() +
                                " vs " + rho.signature().to_string());
  }
  const Matrix& l = L.matrix();
  const Matrix& r = rho.matrix();
  const Matrix ldl = l.adjoint() * l;
  return Operator(l * r * l.adjoint() - 0.5 * (ldl * r + r * ldl), L.signature());
}

inline Operator cavity_thermal_dissipator(const Operator& a, double kappa, double n,
                                          const DensityMatrix& rho, DissipatorMode mode) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("cavity_thermal_dissipator: kappa < 0");
  if (!(n >= 0.0)) throw std::invalid_argument("cavity_thermal_dissipator: n < 0");
  if (!(a.signature() == rho.signature())) {
    throw std::invalid_argument("cavity_thermal_dissipator: signature mismatch");
  }
  if (mode == DissipatorMode::standard) {
    return kappa * (n + 1.0) * standard_dissipator(a, rho) +
           kappa * n * standard_dissipator(a.adjoint(), rho);
  }
  const Matrix& am = a.matrix();
  const Matrix& r = rho.matrix();
  const Matrix num = am.adjoint() * am;
  return Operator(kappa * ((n + 1.0) * (am * r * am.adjoint()) - 0.5 * n * (num * r + r * num)),
                  a.signature());
}

/// H = H0 + H_int with cavity loss/thermal pumping and zero-temperature spin decay.
inline MasterEquation build_master_equation(const ModelParams& p,
                                            DissipatorMode mode = DissipatorMode::standard) {
  p.validate();
  MasterEquation eq{build_hamiltonian(p), {}};
  if (p.kappa > 0.0) {
    const double n = thermal_occupation(p.omega_c, p.T, p.k_B);
    const Operator a = cavity_annihilation(p);
    if (mode == DissipatorMode::standard) {
      eq.terms.push_back({a, p.kappa * (n + 1.0), p.kappa * (n + 1.0)});
      if (n > 0.0) eq.terms.push_back({a.adjoint(), p.kappa * n, p.kappa * n});
    } else {
      eq.terms.push_back({a, p.kappa * (n + 1.0), p.kappa * n});
    }
  }
  for (int i = 0; i < p.N; ++i) {
    const double gi = p.spin_gamma(i);
    if (gi > 0.0) eq.terms.push_back(GeneratorTerm::from({spin_lowering(p, i), gi}));
  }
  return eq;
}

/// Dense matrix-form generator: -i[H, rho] + sum of terms.
inline Matrix apply_generator(const MasterEquation& eq, const Matrix& rho) {
  const Matrix& h = eq.hamiltonian.matrix();
  const cplx mi(0.0, -1.0);
  Matrix out = mi * (h * rho - rho * h);
  for (const auto& t : eq.terms) {
    const Matrix& l = t.jump.matrix();
    const Matrix ldl = l.adjoint() * l;
    out += t.sandwich_rate * (l * rho * l.adjoint());
    out -= 0.5 * t.anticommutator_rate * (ldl * rho + rho * ldl);
  }
  return out;
}

inline Operator apply_generator(const MasterEquation& eq, const DensityMatrix& rho) {
  return Operator(apply_generator(eq, rho.matrix()), rho.signature());
}

/// Sparse form of the generator for repeated application.
///
/// Writes L(rho) = K rho + rho K^dag + sum_j s_j L_j rho L_j^dag with
/// K = -iH - 1/2 sum_j a_j L_j^dag L_j. Products are formed column by column
/// as rho * (sparse), which keeps every inner loop a contiguous axpy. Jump
/// operators with at most one nonzero per row and column (ladder and spin
/// operators) are applied by direct index gathering.
class CompiledGenerator {
 public:
  using Sparse = Eigen::SparseMatrix<cplx>;

  explicit CompiledGenerator(const MasterEquation& eq) : dim_(eq.hamiltonian.dim()) {
    Matrix k = cplx(0.0, -1.0) * eq.hamiltonian.matrix();
    for (const auto& t : eq.terms) {
      const Matrix& l = t.jump.matrix();
      k -= 0.5 * t.anticommutator_rate * (l.adjoint() * l);
      if (t.sandwich_rate == 0.0) continue;
      if (auto mono = as_monomial(l, t.sandwich_rate)) {
        monomial_.push_back(std::move(*mono));
      } else {
        general_.push_back({Matrix(std::sqrt(t.sandwich_rate) * l.adjoint()).sparseView()});
      }
    }
    k_adj_ = Matrix(k.adjoint()).sparseView();
    k_trans_ = Matrix(k.transpose()).sparseView();
    scratch_.resize(dim_, dim_);
  }

  Index dim() const noexcept { return dim_; }

  /// out = L(rho) for arbitrary square rho.
  void apply(const Matrix& rho, Matrix& out) const {
    // K rho = (rho^T K^T)^T
    right_multiply(rho.transpose(), k_trans_, scratch_);
    out = scratch_.transpose();
    add_right_multiply(rho, k_adj_, out);
    add_jumps(rho, out);
  }

  /// L(rho) for Hermitian rho, using K rho = (rho K^dag)^dag. The output is
  /// exactly Hermitian.
  void apply_hermitian(const Matrix& rho, Matrix& out) const {
    right_multiply(rho, k_adj_, scratch_);
    out = scratch_ + scratch_.adjoint();
    add_jumps(rho, out);
  }

  Matrix operator()(const Matrix& rho) const {
    Matrix out(dim_, dim_);
    apply(rho, out);
    return out;
  }

 private:
  struct Monomial {
    std::vector<Index> row;
    std::vector<Index> col;
    std::vector<double> re;
    std::vector<double> im;
  };
  struct General {
    Sparse l_adj;  // sqrt(rate) L^dag
  };

  static std::optional<Monomial> as_monomial(const Matrix& l, double rate) {
    Monomial m;
    std::vector<int> row_count(static_cast<std::size_t>(l.rows()), 0);
    const double s = std::sqrt(rate);
    for (Index c = 0; c < l.cols(); ++c) {
      int in_col = 0;
      for (Index r = 0; r < l.rows(); ++r) {
        if (l(r, c) == cplx(0.0, 0.0)) continue;
        if (++in_col > 1 || ++row_count[static_cast<std::size_t>(r)] > 1) return std::nullopt;
        m.row.push_back(r);
        m.col.push_back(c);
        m.re.push_back(s * l(r, c).real());
        m.im.push_back(s * l(r, c).imag());
      }
    }
    return m;
  }

  template <typename Dense>
  static void right_multiply(const Dense& a, const Sparse& b, Matrix& out) {
    out.setZero();
    add_right_multiply(a, b, out);
  }

  // out += a * b, one axpy per nonzero of b.
  template <typename Dense>
  static void add_right_multiply(const Dense& a, const Sparse& b, Matrix& out) {
    for (Index c = 0; c < b.outerSize(); ++c) {
      for (Sparse::InnerIterator it(b, c); it; ++it) {
        out.col(c) += it.value() * a.col(it.row());
      }
    }
  }

  void add_jumps(const Matrix& rho, Matrix& out) const {
    for (const auto& m : monomial_) {
      const std::size_t nz = m.row.size();
      for (std::size_t q = 0; q < nz; ++q) {
        // (L rho L^dag)(row_p, row_q) = v_p conj(v_q) rho(col_p, col_q)
        const double qr = m.re[q];
        const double qi = -m.im[q];
        const cplx* src = rho.col(m.col[q]).data();
        cplx* dst = out.col(m.row[q]).data();
        for (std::size_t p = 0; p < nz; ++p) {
          const double wr = m.re[p] * qr - m.im[p] * qi;
          const double wi = m.re[p] * qi + m.im[p] * qr;
          const cplx x = src[m.col[p]];
          dst[m.row[p]] += cplx(wr * x.real() - wi * x.imag(), wr * x.imag() + wi * x.real());
        }
      }
    }
    for (const auto& g : general_) {
      // L rho L^dag = ((rho^dag L^dag)^dag) L^dag
      right_multiply(rho.adjoint(), g.l_adj, scratch_);
      add_right_multiply(scratch_.adjoint(), g.l_adj, out);
    }
  }

  Index dim_;
  Sparse k_adj_;
  Sparse k_trans_;
  std::vector<Monomial> monomial_;
  std::vector<General> general_;
  mutable Matrix scratch_;
};

inline constexpr std::size_t kSuperOperatorCap = 40000;  // on d^2

/// Column-stacking vectorization.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Index d) {
  if (v.size() != d * d) throw std::invalid_argument("unvec: length is not d^2");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

/// Generator as a d^2 x d^2 matrix acting on vec(rho). Stored sparse.
class SuperOperator {
 public:
  using Sparse = Eigen::SparseMatrix<cplx>;

  SuperOperator(Sparse m, HilbertSignature sig, bool trace_preserving)
      : m_(std::move(m)), sig_(std::move(sig)), cptp_(trace_preserving) {
    const auto d = static_cast<Index>(sig_.total());
    if (m_.rows() != d * d || m_.cols() != d * d) {
      throw std::invalid_argument("SuperOperator: dimension is not the square of " +
                                  std::to_string(d));
    }
  }

  const Sparse& matrix() const noexcept { return m_; }
  Matrix dense() const { return Matrix(m_); }
  const HilbertSignature& signature() const noexcept { return sig_; }
  Index dim() const noexcept { return m_.rows(); }
  Index hilbert_dim() const noexcept { return static_cast<Index>(sig_.total()); }
  bool trace_preserving() const noexcept { return cptp_; }

  Vector apply(const Vector& v) const { return m_ * v; }
  Matrix apply(const Matrix& rho) const { return unvec(m_ * vec(rho), hilbert_dim()); }

  SuperOperator scaled(double c) const { return SuperOperator(c * m_, sig_, cptp_); }

 private:
  Sparse m_;
  HilbertSignature sig_;
  bool cptp_;
};

namespace detail {
inline SuperOperator::Sparse sparse_kron(const SuperOperator::Sparse& a,
                                         const SuperOperator::Sparse& b) {
  SuperOperator::Sparse out = Eigen::kroneckerProduct(a, b);
  return out;
}
}  // namespace detail

/// -i (I (x) H - H^T (x) I) + sum s conj(L) (x) L - a/2 (I (x) L^dag L + (L^dag L)^T (x) I).
inline SuperOperator build_liouvillian(const MasterEquation& eq,
                                       std::size_t cap = kSuperOperatorCap) {
  using Sparse = SuperOperator::Sparse;
  const Index d = eq.hamiltonian.dim();
  const auto d2 = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  if (d2 > cap) {
    throw std::invalid_argument("build_liouvillian: d^2 = " + std::to_string(d2) +
                                " exceeds cap " + std::to_string(cap));
  }
  Sparse id(d, d);
  id.setIdentity();
  const Sparse h = eq.hamiltonian.matrix().sparseView();
  const Sparse ht = Sparse(h.transpose());
  Sparse l = cplx(0.0, -1.0) * (detail::sparse_kron(id, h) - detail::sparse_kron(ht, id));
  for (const auto& t : eq.terms) {
    const Matrix& lm = t.jump.matrix();
    const Sparse ls = lm.sparseView();
    const Sparse lc = Sparse(ls.conjugate());
    const Sparse ldl = Matrix(lm.adjoint() * lm).sparseView();
    const Sparse ldlt = Sparse(ldl.transpose());
    l += t.sandwich_rate * detail::sparse_kron(lc, ls);
    l -= (0.5 * t.anticommutator_rate) *
         (detail::sparse_kron(id, ldl) + detail::sparse_kron(ldlt, id));
  }
  l.prune(cplx(0.0, 0.0), 0.0);
  l.makeCompressed();
  return SuperOperator(std::move(l), eq.signature(), eq.trace_preserving());
}

/// Largest photon cutoff whose Liouvillian fits in `cap` for N spins.
inline int max_cutoff_for_cap(int N, std::size_t cap) {
  const std::size_t qubits = std::size_t{1} << static_cast<std::size_t>(N + 1);
  int c = 0;
  while (true) {
    const std::size_t d = static_cast<std::size_t>(c + 2) * qubits;
    if (d * d > cap) return c;
    ++c;
  }
}

inline SuperOperator build_liouvillian(const ModelParams& p,
                                       DissipatorMode mode = DissipatorMode::standard,
                                       std::size_t cap = kSuperOperatorCap) {
  const std::size_t d = signature(p).total();
  if (d * d > cap) {
    throw std::invalid_argument(
        "build_liouvillian: d^2 = " + std::to_string(d * d) + " exceeds cap " +
        std::to_string(cap) + "; reduce photon_cutoff from " + std::to_string(p.photon_cutoff) +
        " to at most " + std::to_string(max_cutoff_for_cap(p.N, cap)));
  }
  return build_liouvillian(build_master_equation(p, mode), cap);
}

}  // namespace qbattery

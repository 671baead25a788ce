#pragma once

// Tensor-product operator algebra on dense complex matrices.
//
// Basis conventions used everywhere in the library:
//   * composite ordering is [cavity, spin_1 ... spin_N, catalyst];
//   * two-level subsystems are ordered ground-first, so sigma^dag sigma = diag(0, 1);
//   * Fock states are ordered by photon number, |0>, |1>, ..., |cutoff>.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qbattery {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// Ordered list of subsystem dimensions identifying a tensor-product space.
class HilbertSignature {
 public:
  explicit HilbertSignature(std::vector<std::size_t> dims,
                            std::size_t cap = kDefaultDimensionCap)
      : dims_(std::move(dims)), cap_(cap) {
    if (dims_.empty()) {
      throw std::invalid_argument("HilbertSignature: empty dimension list");
    }
    std::size_t total = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (dims_[k] < 2) {
        throw std::invalid_argument("HilbertSignature: subsystem " + std::to_string(k) +
                                    " has dimension " + std::to_string(dims_[k]) +
                                    " (must be >= 2)");
      }
      total *= dims_[k];
      if (total > cap_) {
        throw std::invalid_argument("HilbertSignature: total dimension exceeds cap " +
                                    std::to_string(cap_));
      }
    }
    total_ = total;
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t k) const { return dims_.at(k); }
  std::size_t total() const noexcept { return total_; }
  std::size_t cap() const noexcept { return cap_; }

  HilbertSignature concat(const HilbertSignature& other) const {
    std::vector<std::size_t> d = dims_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    return HilbertSignature(std::move(d), std::max(cap_, other.cap_));
  }

  /// Signature of the subsystems listed in `keep`, in their original order.
  HilbertSignature select(std::span<const std::size_t> keep) const {
    std::vector<std::size_t> d;
    d.reserve(keep.size());
    for (std::size_t k : keep) d.push_back(dims_.at(k));
    return HilbertSignature(std::move(d), cap_);
  }

  friend bool operator==(const HilbertSignature& a, const HilbertSignature& b) {
    return a.dims_ == b.dims_;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (k) s += ",";
      s += std::to_string(dims_[k]);
    }
    return s + "]";
  }

 private:
  std::vector<std::size_t> dims_;
  std::size_t cap_;
  std::size_t total_ = 1;
};

/// Dense square matrix tagged with the space it acts on. Not necessarily Hermitian.
class Operator {
 public:
  Operator(Matrix m, HilbertSignature sig) : m_(std::move(m)), sig_(std::move(sig)) {
    const auto d = static_cast<Index>(sig_.total());
    if (m_.rows() != d || m_.cols() != d) {
      throw std::invalid_argument("Operator: matrix is " + std::to_string(m_.rows()) + "x" +
                                  std::to_string(m_.cols()) + " but signature " +
                                  sig_.to_string() + " has dimension " + std::to_string(d));
    }
  }

  static Operator identity(const HilbertSignature& sig) {
    const auto d = static_cast<Index>(sig.total());
    return Operator(Matrix::Identity(d, d), sig);
  }
  static Operator zero(const HilbertSignature& sig) {
    const auto d = static_cast<Index>(sig.total());
    return Operator(Matrix::Zero(d, d), sig);
  }

  const Matrix& matrix() const noexcept { return m_; }
  const HilbertSignature& signature() const noexcept { return sig_; }
  Index dim() const noexcept { return m_.rows(); }

  Operator adjoint() const { return Operator(m_.adjoint(), sig_); }
  cplx trace() const { return m_.trace(); }

  double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  bool hermitian(double tol = 1e-12) const { return hermiticity_error() <= tol; }

  Operator& operator+=(const Operator& o) {
    require_same(o, "+=");
    m_ += o.m_;
    return *this;
  }
  Operator& operator-=(const Operator& o) {
    require_same(o, "-=");
    m_ -= o.m_;
    return *this;
  }
  Operator& operator*=(cplx s) {
    m_ *= s;
    return *this;
  }

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(double s, Operator a) { return a *= cplx(s, 0.0); }
  friend Operator operator*(const Operator& a, const Operator& b) {
    a.require_same(b, "*");
    return Operator(a.m_ * b.m_, a.sig_);
  }

 private:
  void require_same(const Operator& o, const char* op) const {
    if (!(sig_ == o.sig_)) {
      throw std::invalid_argument(std::string("Operator ") + op + ": signature " +
                                  sig_.to_string() + " vs " + o.sig_.to_string());
    }
  }

  Matrix m_;
  HilbertSignature sig_;
};

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }
inline Operator anticommutator(const Operator& a, const Operator& b) { return a * b + b * a; }

/// Normalized pure state.
class StateVector {
 public:
  StateVector(Vector amplitudes, HilbertSignature sig)
      : v_(std::move(amplitudes)), sig_(std::move(sig)) {
    if (v_.size() != static_cast<Index>(sig_.total())) {
      throw std::invalid_argument("StateVector: length " + std::to_string(v_.size()) +
                                  " does not match signature " + sig_.to_string());
    }
    const double n = v_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("StateVector: zero or non-finite norm");
    }
    v_ /= n;
  }

  const Vector& amplitudes() const noexcept { return v_; }
  const HilbertSignature& signature() const noexcept { return sig_; }
  Index dim() const noexcept { return v_.size(); }

 private:
  Vector v_;
  HilbertSignature sig_;
};

struct StateDiagnostics {
  double trace_error = 0.0;        // |Tr rho - 1|
  double hermiticity_error = 0.0;  // max |rho - rho^dag|
  double min_eigenvalue = 0.0;     // of the Hermitian part
};

/// Density operator of the full (or a reduced) system.
///
/// `from_operator` enforces Hermiticity, unit trace and positivity within a
/// tolerance; `unchecked` wraps integrator output whose deviations are
/// tracked through `diagnostics()` instead.
class DensityMatrix {
 public:
  static DensityMatrix from_operator(const Operator& op, double tol = 1e-10) {
    DensityMatrix rho(op.matrix(), op.signature());
    const auto diag = rho.diagnostics();
    if (diag.hermiticity_error > tol) {
      throw std::invalid_argument("DensityMatrix: not Hermitian (error " +
                                  std::to_string(diag.hermiticity_error) + ")");
    }
    if (diag.trace_error > tol) {
      throw std::invalid_argument("DensityMatrix: trace differs from 1 by " +
                                  std::to_string(diag.trace_error));
    }
    if (diag.min_eigenvalue < -tol) {
      throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                  std::to_string(diag.min_eigenvalue));
    }
    return rho;
  }

  static DensityMatrix pure(const StateVector& psi) {
    const Vector& v = psi.amplitudes();
    return DensityMatrix(v * v.adjoint(), psi.signature());
  }

  static DensityMatrix unchecked(Matrix m, HilbertSignature sig) {
    return DensityMatrix(std::move(m), std::move(sig));
  }

  const Matrix& matrix() const noexcept { return m_; }
  const HilbertSignature& signature() const noexcept { return sig_; }
  Index dim() const noexcept { return m_.rows(); }
  Operator as_operator() const { return Operator(m_, sig_); }

  StateDiagnostics diagnostics() const {
    StateDiagnostics d;
    d.trace_error = std::abs(m_.trace() - cplx(1.0, 0.0));
    d.hermiticity_error = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    const Matrix herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
  }

 private:
  DensityMatrix(Matrix m, HilbertSignature sig) : m_(std::move(m)), sig_(std::move(sig)) {
    const auto d = static_cast<Index>(sig_.total());
    if (m_.rows() != d || m_.cols() != d) {
      throw std::invalid_argument("DensityMatrix: shape does not match signature " +
                                  sig_.to_string());
    }
  }

  Matrix m_;
  HilbertSignature sig_;
};

/// Truncated bosonic annihilation operator on Fock levels 0..cutoff.
inline Operator annihilation(std::size_t cutoff) {
  if (cutoff < 1) {
    throw std::invalid_argument("annihilation: photon cutoff must be >= 1");
  }
  const auto d = static_cast<Index>(cutoff + 1);
  Matrix a = Matrix::Zero(d, d);
  for (Index m = 1; m < d; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  return Operator(std::move(a), HilbertSignature({cutoff + 1}));
}

/// Two-level lowering operator |g><e| in the ground-first basis.
inline Operator sigma_lowering() {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 1) = 1.0;
  return Operator(std::move(s), HilbertSignature({2}));
}

/// I (x) ... (x) op (x) ... (x) I with `op` placed at subsystem `index`.
inline Operator embed(const Operator& op, std::size_t index, const HilbertSignature& sig) {
  if (index >= sig.size()) {
    throw std::invalid_argument("embed: index " + std::to_string(index) +
                                " out of range for signature " + sig.to_string());
  }
  if (static_cast<std::size_t>(op.dim()) != sig[index]) {
    throw std::invalid_argument("embed: operator dimension " + std::to_string(op.dim()) +
                                " does not match subsystem " + std::to_string(index) +
                                " dimension " + std::to_string(sig[index]));
  }
  std::size_t left = 1;
  std::size_t right = 1;
  for (std::size_t k = 0; k < index; ++k) left *= sig[k];
  for (std::size_t k = index + 1; k < sig.size(); ++k) right *= sig[k];
  const Matrix il = Matrix::Identity(static_cast<Index>(left), static_cast<Index>(left));
  const Matrix ir = Matrix::Identity(static_cast<Index>(right), static_cast<Index>(right));
  Matrix tmp = Eigen::kroneckerProduct(il, op.matrix()).eval();
  return Operator(Eigen::kroneckerProduct(tmp, ir).eval(), sig);
}

/// Kronecker product in list order; the signature is the concatenation.
inline Operator tensor(std::span<const Operator> ops) {
  if (ops.empty()) throw std::invalid_argument("tensor: empty operator list");
  Matrix acc = ops.front().matrix();
  HilbertSignature sig = ops.front().signature();
  for (std::size_t k = 1; k < ops.size(); ++k) {
    sig = sig.concat(ops[k].signature());
    acc = Eigen::kroneckerProduct(acc, ops[k].matrix()).eval();
  }
  return Operator(std::move(acc), std::move(sig));
}

inline Operator tensor(std::initializer_list<Operator> ops) {
  return tensor(std::span<const Operator>(ops.begin(), ops.size()));
}

/// Mixed-radix digits of a composite basis index (first subsystem most significant).
inline std::vector<std::size_t> basis_digits(std::size_t index, const HilbertSignature& sig) {
  std::vector<std::size_t> digits(sig.size());
  for (std::size_t k = sig.size(); k-- > 0;) {
    digits[k] = index % sig[k];
    index /= sig[k];
  }
  return digits;
}

inline std::size_t basis_index(std::span<const std::size_t> digits, const HilbertSignature& sig) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < sig.size(); ++k) idx = idx * sig[k] + digits[k];
  return idx;
}

}  // namespace qbattery

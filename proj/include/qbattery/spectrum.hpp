#pragma once

// Liouvillian spectra.
//
// The generator of the battery model commutes with the excitation-number
// difference between ket and bra, so its sparsity graph splits into many
// irreducible blocks. Each block is diagonalized on its own: densely through
// LAPACK zgeev when it fits under `dense_block_cap`, otherwise by
// shift-invert Arnoldi around 0 for the slowest modes only.

#include "qbattery/errors.hpp"
#include "qbattery/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace qbattery {

struct SpectrumOptions {
  std::size_t dense_block_cap = 4096;
  std::size_t slow_modes = 20;  // per block on the iterative path
  double shift = 1e-3;          // real, positive: never an eigenvalue of a CPTP generator
  std::size_t krylov_dim = 100;
  int max_restarts = 200;
  double tol = 1e-10;
};

struct SpectrumResult {
  std::vector<cplx> eigenvalues;  // descending real part
  std::size_t steady_index = 0;   // smallest |Lambda|
  double gap = 0.0;
  bool complete = true;           // false if any block went through the iterative path
  bool trace_preserving = true;   // false for the paper-literal dissipator
  std::size_t block_count = 0;
  std::size_t largest_block = 0;
  std::vector<double> residuals;  // ||B x - Lambda x|| for iteratively computed modes
};

/// Connected components of the (symmetrized) nonzero pattern; each component
/// is sorted and components are ordered by their smallest index.
inline std::vector<std::vector<Index>> irreducible_blocks(const SuperOperator::Sparse& m) {
  const Index n = m.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& px = parent[static_cast<std::size_t>(x)];
      px = parent[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  };
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (SuperOperator::Sparse::InnerIterator it(m, c); it; ++it) {
      const Index a = find(it.row());
      const Index b = find(c);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  }
  std::vector<std::vector<Index>> blocks;
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    const Index r = find(i);
    auto& s = slot[static_cast<std::size_t>(r)];
    if (s < 0) {
      s = static_cast<Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(s)].push_back(i);
  }
  return blocks;
}

namespace detail {

inline Matrix dense_block(const SuperOperator::Sparse& m, const std::vector<Index>& idx) {
  const Index n = static_cast<Index>(idx.size());
  std::vector<Index> local(static_cast<std::size_t>(m.rows()), -1);
  for (Index k = 0; k < n; ++k) local[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = k;
  Matrix b = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index c = idx[static_cast<std::size_t>(k)];
    for (SuperOperator::Sparse::InnerIterator it(m, c); it; ++it) {
      const Index r = local[static_cast<std::size_t>(it.row())];
      if (r >= 0) b(r, k) = it.value();
    }
  }
  return b;
}

inline SuperOperator::Sparse sparse_block(const SuperOperator::Sparse& m,
                                          const std::vector<Index>& idx) {
  const Index n = static_cast<Index>(idx.size());
  std::vector<Index> local(static_cast<std::size_t>(m.rows()), -1);
  for (Index k = 0; k < n; ++k) local[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = k;
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Index k = 0; k < n; ++k) {
    for (SuperOperator::Sparse::InnerIterator it(m, idx[static_cast<std::size_t>(k)]); it; ++it) {
      const Index r = local[static_cast<std::size_t>(it.row())];
      if (r >= 0) trips.emplace_back(r, k, it.value());
    }
  }
  SuperOperator::Sparse b(n, n);
  b.setFromTriplets(trips.begin(), trips.end());
  return b;
}

/// Eigenvalues of a dense complex matrix (LAPACK zgeev, no eigenvectors).
inline std::vector<cplx> dense_eigenvalues(Matrix a) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return {};
  Vector w(n);
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'N', n, reinterpret_cast<lapack_complex_double*>(a.data()), n,
      reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr, 1);
  if (info != 0) {
    throw SolverError("zgeev failed to converge (info = " + std::to_string(info) + ")");
  }
  return {w.data(), w.data() + w.size()};
}

struct SlowModes {
  std::vector<cplx> values;
  std::vector<double> residuals;
  std::vector<Vector> vectors;
};

/// The `k` eigenvalues of `b` closest to `opts.shift`, by Arnoldi on
/// (b - shift)^{-1} with explicit restarts.
inline SlowModes shift_invert_modes(const SuperOperator::Sparse& b, std::size_t k,
                                    const SpectrumOptions& opts) {
  const Index n = b.rows();
  k = std::min<std::size_t>(k, static_cast<std::size_t>(n));
  const Index m = std::min<Index>(n, static_cast<Index>(std::max(opts.krylov_dim, 2 * k + 10)));

  SuperOperator::Sparse shifted = b;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= opts.shift;
  shifted.makeCompressed();
  Eigen::SparseLU<SuperOperator::Sparse> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw SolverError("shift-invert: sparse LU failed");

  Vector start(n);
  for (Index i = 0; i < n; ++i) start(i) = cplx(1.0 + 1e-3 * static_cast<double>(i % 17), 0.0);
  start.normalize();

  SlowModes out;
  std::vector<double> estimates;
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    Matrix V = Matrix::Zero(n, m + 1);
    Matrix H = Matrix::Zero(m + 1, m);
    V.col(0) = start;
    Index built = m;
    for (Index j = 0; j < m; ++j) {
      Vector w = lu.solve(V.col(j));
      for (int pass = 0; pass < 2; ++pass) {
        for (Index i = 0; i <= j; ++i) {
          const cplx h = V.col(i).dot(w);
          H(i, j) += h;
          w -= h * V.col(i);
        }
      }
      const double hn = w.norm();
      H(j + 1, j) = hn;
      if (hn < 1e-14) {
        built = j + 1;
        break;
      }
      V.col(j + 1) = w / hn;
    }
    const Matrix Hm = H.topLeftCorner(built, built);
    Eigen::ComplexEigenSolver<Matrix> es(Hm, true);
    std::vector<Index> order(static_cast<std::size_t>(built));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index x, Index y) {
      return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
    });
    const std::size_t want = std::min<std::size_t>(k, order.size());
    const double beta = built < H.rows() ? std::abs(H(built, built - 1)) : 0.0;
    bool converged = true;
    Vector next = Vector::Zero(n);
    estimates.clear();
    for (std::size_t w = 0; w < want; ++w) {
      const Index c = order[w];
      const cplx theta = es.eigenvalues()(c);
      const Vector y = es.eigenvectors().col(c);
      const double est = beta * std::abs(y(built - 1));
      estimates.push_back(est);
      if (est > opts.tol * std::abs(theta)) converged = false;
      next += V.leftCols(built) * y;
    }
    if (converged || built < m || restart == opts.max_restarts) {
      out.values.clear();
      out.residuals.clear();
      out.vectors.clear();
      for (std::size_t w = 0; w < want; ++w) {
        const Index c = order[w];
        const cplx lambda = opts.shift + 1.0 / es.eigenvalues()(c);
        Vector x = V.leftCols(built) * es.eigenvectors().col(c);
        x.normalize();
        out.residuals.push_back((b * x - lambda * x).norm());
        out.values.push_back(lambda);
        out.vectors.push_back(std::move(x));
      }
      if (!converged && built == m) {
        std::string msg = "shift-invert Arnoldi did not converge; residual norms:";
        for (double r : out.residuals) msg += " " + std::to_string(r);
        throw SolverError(msg);
      }
      return out;
    }
    start = next.normalized();
  }
  return out;
}

}  // namespace detail

inline SpectrumResult liouvillian_spectrum(const SuperOperator& L,
                                           const SpectrumOptions& opts = {}) {
  SpectrumResult res;
  res.trace_preserving = L.trace_preserving();
  const auto blocks = irreducible_blocks(L.matrix());
  res.block_count = blocks.size();
  for (const auto& idx : blocks) {
    res.largest_block = std::max(res.largest_block, idx.size());
    if (idx.size() <= opts.dense_block_cap) {
      auto ev = detail::dense_eigenvalues(detail::dense_block(L.matrix(), idx));
      res.eigenvalues.insert(res.eigenvalues.end(), ev.begin(), ev.end());
    } else {
      res.complete = false;
      auto modes =
          detail::shift_invert_modes(detail::sparse_block(L.matrix(), idx), opts.slow_modes, opts);
      res.eigenvalues.insert(res.eigenvalues.end(), modes.values.begin(), modes.values.end());
      res.residuals.insert(res.residuals.end(), modes.residuals.begin(), modes.residuals.end());
    }
  }
  std::stable_sort(res.eigenvalues.begin(), res.eigenvalues.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  if (!res.eigenvalues.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.eigenvalues.size(); ++i) {
      if (std::abs(res.eigenvalues[i]) < std::abs(res.eigenvalues[best])) best = i;
    }
    res.steady_index = best;
  }
  if (res.eigenvalues.size() >= 2) {
    const std::size_t slow = res.steady_index == 0 ? 1 : 0;
    res.gap = std::max(0.0, -res.eigenvalues[slow].real());
  }
  return res;
}

/// -Re of the slowest eigenvalue other than the steady one.
inline double spectral_gap(const SpectrumResult& s) {
  if (s.eigenvalues.size() < 2) {
    throw std::invalid_argument("spectral_gap: fewer than two eigenvalues");
  }
  return s.gap;
}

/// Number of eigenvalues with |Lambda| below `tol`.
inline std::size_t count_stationary(const SpectrumResult& s, double tol = 1e-8) {
  return static_cast<std::size_t>(std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(),
                                                [tol](cplx z) { return std::abs(z) < tol; }));
}

/// Slowest mode with Re(Lambda) < -tol, i.e. the slowest one that actually decays.
inline std::optional<cplx> slowest_decaying_mode(const SpectrumResult& s, double tol = 1e-8) {
  for (cplx z : s.eigenvalues) {
    if (z.real() < -tol) return z;
  }
  return std::nullopt;
}

}  // namespace qbattery

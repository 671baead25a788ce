#include "qbattery/lindblad.hpp"
#include "qbattery/testing/oracles.hpp"
#include "qbattery/testing/selftest.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace qbattery;
using Catch::Approx;

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

DensityMatrix random_state(const HilbertSignature& sig, std::mt19937_64& rng) {
  return DensityMatrix::unchecked(oracle::random_density_matrix(static_cast<Index>(sig.total()), rng), sig);
}

ModelParams small_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams p;
  p.N = 2;
  p.photon_cutoff = 2;
  p.kappa = 0.5 * u(rng);
  p.gamma = 0.2 * u(rng);
  p.T = 0.2 + u(rng);
  p.g = u(rng) - 0.5;
  p.lambda = 2.0 * u(rng) - 1.0;
  p.J = u(rng);
  return p;
}

}  // namespace

TEST_CASE("thermal occupation", "[lindblad]") {
  CHECK(thermal_occupation(0.5, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(thermal_occupation(0.0, 0.8, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(thermal_occupation(-1.0, 0.8, 1.0), std::invalid_argument);
  const double n = thermal_occupation(0.5, 0.8, 1.0);
  const double frozen = 1.0 / (std::exp(0.625) - 1.0);
  CHECK(frozen == Approx(1.1517474).margin(1e-7));
  CHECK(n == Approx(oracle::bose_einstein(0.5, 0.8, 1.0)).epsilon(1e-14));
  CHECK(n == Approx(1.1518).margin(1e-4));
  CHECK(thermal_occupation(0.5, 1.0, 1.0) > n);
  CHECK(thermal_occupation(0.5, 1e-3, 1.0) < 1e-200);  // exp(500) stays finite
}

TEST_CASE("standard dissipator", "[lindblad]") {
  const HilbertSignature q({2});
  Matrix e = Matrix::Zero(2, 2);
  e(1, 1) = 1.0;
  const DensityMatrix excited = DensityMatrix::from_operator(Operator(e, q));
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = 1.0;
  expect(1, 1) = -1.0;
  CHECK(max_abs(standard_dissipator(sigma_lowering(), excited).matrix() - expect) == 0.0);
  CHECK(max_abs(standard_dissipator(Operator::identity(q), excited).matrix()) == 0.0);
  CHECK_THROWS_AS(standard_dissipator(annihilation(2), excited), std::invalid_argument);

  std::mt19937_64 rng(5);
  const HilbertSignature d4({4});
  for (int k = 0; k < 100; ++k) {
    const Operator L(oracle::random_ginibre(4, rng), d4);
    CHECK(std::abs(standard_dissipator(L, random_state(d4, rng)).trace()) < 1e-13);
  }
}

TEST_CASE("cavity thermal dissipator", "[lindblad]") {
  const Operator a = annihilation(10);
  const HilbertSignature& sig = a.signature();
  std::mt19937_64 rng(9);
  const DensityMatrix rho = random_state(sig, rng);

  CHECK_THROWS_AS(cavity_thermal_dissipator(a, -0.1, 1.0, rho, DissipatorMode::standard), std::invalid_argument);
  CHECK_THROWS_AS(cavity_thermal_dissipator(a, 0.1, -1.0, rho, DissipatorMode::standard), std::invalid_argument);

  SECTION("n = 0 reduces to pure loss") {
    const Matrix lhs = cavity_thermal_dissipator(a, 0.15, 0.0, rho, DissipatorMode::standard).matrix();
    const Matrix rhs = (0.15 * standard_dissipator(a, rho)).matrix();
    CHECK(max_abs(lhs - rhs) < 1e-15);
  }

  SECTION("standard form is traceless, printed form is not") {
    Matrix one = Matrix::Zero(11, 11);
    one(1, 1) = 1.0;
    const DensityMatrix fock1 = DensityMatrix::from_operator(Operator(one, sig));
    const double kappa = 0.15;
    const cplx tr_std = cavity_thermal_dissipator(a, kappa, 1.0, fock1, DissipatorMode::standard).trace();
    const cplx tr_lit = cavity_thermal_dissipator(a, kappa, 1.0, fock1, DissipatorMode::paper_literal).trace();
    CHECK(std::abs(tr_std) < 1e-15);
    // kappa (n+1) * 1 - kappa n * 1 = kappa
    CHECK(tr_lit.real() == Approx(kappa).margin(1e-15));
    CHECK(std::abs(tr_lit.imag()) < 1e-15);
    // holds for any n on this witness
    const double n = thermal_occupation(0.5, 0.8, 1.0);
    CHECK(cavity_thermal_dissipator(a, kappa, n, fock1, DissipatorMode::paper_literal).trace().real() ==
          Approx(kappa).margin(1e-14));
  }

  SECTION("standard form relaxes an isolated cavity to the truncated thermal state") {
    const double n = thermal_occupation(0.5, 0.8, 1.0);
    const auto eq = selftest::thermal_cavity(0.5, 0.15, n, 10, DissipatorMode::standard);
    const SuperOperator L = build_liouvillian(eq);
    // the truncated Gibbs state is annihilated by the generator
    const auto pops = oracle::truncated_thermal_populations(0.5, 0.8, 1.0, 10);
    Matrix gibbs = Matrix::Zero(11, 11);
    for (std::size_t m = 0; m < pops.size(); ++m) gibbs(static_cast<Index>(m), static_cast<Index>(m)) = pops[m];
    CHECK(L.apply(vec(gibbs)).norm() < 1e-15);
    const double mean = oracle::truncated_thermal_mean(0.5, 0.8, 1.0, 10);
    // the cutoff at 10 lowers <n> by about 0.0114 relative to the untruncated occupation
    CHECK(mean == Approx(1.1403693).margin(1e-7));
    CHECK(std::abs(mean - n) > 1e-3);
    CHECK(std::abs(oracle::truncated_thermal_mean(0.5, 0.8, 1.0, 16) - n) < 1e-3);
  }
}

TEST_CASE("master equation assembly", "[lindblad]") {
  ModelParams p;
  p.photon_cutoff = 2;
  const auto std_eq = build_master_equation(p, DissipatorMode::standard);
  CHECK(std_eq.trace_preserving());
  CHECK(std_eq.terms.size() == 2 + 3);
  const auto lit_eq = build_master_equation(p, DissipatorMode::paper_literal);
  CHECK_FALSE(lit_eq.trace_preserving());
  CHECK(lit_eq.terms.size() == 1 + 3);

  p.kappa = 0.0;
  p.gamma = 0.0;
  CHECK(build_master_equation(p).terms.empty());
  p.kappa = 0.1;
  p.T = 0.0;
  CHECK(build_master_equation(p).terms.size() == 1);
}

TEST_CASE("vectorization convention", "[lindblad]") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 10; ++k) {
    const Matrix A = oracle::random_ginibre(4, rng);
    const Matrix B = oracle::random_ginibre(4, rng);
    const Matrix R = oracle::random_ginibre(4, rng);
    const Matrix kron = Eigen::kroneckerProduct(B.transpose(), A).eval();
    CHECK(max_abs(vec(A * R * B) - kron * vec(R)) < 1e-12);
  }
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Vector v = vec(m);
  CHECK(v(1) == cplx(3.0));  // column stacking: (1,0) entry second
  CHECK(unvec(v, 2) == m);
  CHECK_THROWS_AS(unvec(v, 3), std::invalid_argument);
}

TEST_CASE("Liouvillian", "[lindblad]") {
  SECTION("zero generator") {
    ModelParams p;
    p.photon_cutoff = 1;
    p.N = 1;
    p.omega_c = p.omega_a = p.omega_cat = 0.0;
    p.g = p.lambda = p.J = 0.0;
    p.kappa = p.gamma = 0.0;
    const SuperOperator L = build_liouvillian(p);
    CHECK(L.matrix().nonZeros() == 0);
  }

  SECTION("cap reports the needed cutoff") {
    ModelParams p;
    p.photon_cutoff = 30;
    CHECK_THROWS_WITH(build_liouvillian(p), Catch::Matchers::ContainsSubstring("at most 11"));
    // d = 16 (cutoff + 1) at N = 3: 192^2 = 36864 fits, 208^2 does not
    CHECK(max_cutoff_for_cap(3, kSuperOperatorCap) == 11);
  }

  SECTION("agrees with the column-by-column matrix form") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 5; ++k) {
      const ModelParams p = small_params(rng);
      for (auto mode : {DissipatorMode::standard, DissipatorMode::paper_literal}) {
        const auto eq = build_master_equation(p, mode);
        const Index d = eq.hamiltonian.dim();
        const Matrix ref = oracle::liouvillian_by_columns(d, [&](const Matrix& m) { return apply_generator(eq, m); });
        CHECK(max_abs(build_liouvillian(eq).dense() - ref) < 1e-12);
      }
    }
  }

  SECTION("trace annihilation and Hermiticity preservation in standard mode") {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 5; ++k) {
      const ModelParams p = small_params(rng);
      const SuperOperator L = build_liouvillian(p);
      const Index d = L.hilbert_dim();
      const Vector id = vec(Matrix::Identity(d, d));
      CHECK((L.matrix().adjoint() * id).norm() < 1e-10);
      for (int r = 0; r < 3; ++r) {
        const Matrix h = oracle::random_hermitian(d, rng);
        const Matrix out = L.apply(h);
        CHECK(max_abs(out - out.adjoint()) < 1e-12);
      }
    }
  }

  SECTION("printed dissipator breaks trace annihilation") {
    ModelParams p;
    p.photon_cutoff = 2;
    const SuperOperator L = build_liouvillian(p, DissipatorMode::paper_literal);
    CHECK_FALSE(L.trace_preserving());
    const Index d = L.hilbert_dim();
    CHECK((L.matrix().adjoint() * vec(Matrix::Identity(d, d))).norm() > 1e-3);
  }
}

TEST_CASE("compiled generator matches the matrix form", "[lindblad]") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 4; ++k) {
    ModelParams p = small_params(rng);
    p.N = 1 + k % 3;
    p.gamma_per_spin.assign(static_cast<std::size_t>(p.N), 0.0);
    for (int i = 0; i < p.N; ++i) p.gamma_per_spin[static_cast<std::size_t>(i)] = 0.01 * (i + 1);
    for (auto mode : {DissipatorMode::standard, DissipatorMode::paper_literal}) {
      const auto eq = build_master_equation(p, mode);
      const CompiledGenerator gen(eq);
      const SuperOperator L = build_liouvillian(eq);
      const Index d = eq.hamiltonian.dim();
      Matrix out(d, d);
      const Matrix h = oracle::random_density_matrix(d, rng);
      gen.apply_hermitian(h, out);
      const Matrix ref = apply_generator(eq, h);
      CHECK(max_abs(out - ref) < 1e-12);
      CHECK(max_abs(L.apply(h) - ref) < 1e-12);
      const Matrix g = oracle::random_ginibre(d, rng);
      gen.apply(g, out);
      CHECK(max_abs(out - apply_generator(eq, g)) < 1e-12);
    }
  }

  SECTION("non-monomial jump operators take the general path") {
    const HilbertSignature sig({3});
    Matrix l = Matrix::Zero(3, 3);
    l(0, 1) = 1.0;
    l(0, 2) = 0.5;
    l(1, 2) = cplx(0.0, 0.3);
    Matrix h = Matrix::Zero(3, 3);
    h(2, 2) = 1.0;
    h(0, 1) = h(1, 0) = 0.2;
    const MasterEquation eq{Operator(h, sig), {GeneratorTerm::from({Operator(l, sig), 0.7})}};
    const CompiledGenerator gen(eq);
    std::mt19937_64 r2(1);
    const Matrix rho = oracle::random_density_matrix(3, r2);
    Matrix out(3, 3);
    gen.apply(rho, out);
    CHECK(max_abs(out - apply_generator(eq, rho)) < 1e-14);
  }
}

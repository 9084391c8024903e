#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcare/care.hpp"
#include "testutil.hpp"

using namespace qcare;
using testutil::Rng;

namespace {
Matrix mat1(Complex v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}
}  // namespace

TEST_CASE("build_hamiltonian trivial blocks") {
  auto zero = CareProblem::make(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1));
  CHECK(build_hamiltonian(zero).h.isZero(0.0));

  auto prob = CareProblem::make(Matrix::Zero(1, 1), Matrix::Identity(1, 1),
                                Matrix::Identity(1, 1));
  const Matrix h = build_hamiltonian(prob).h;
  CHECK(h(0, 0) == Complex(0.0));
  CHECK(h(0, 1) == Complex(-1.0));
  CHECK(h(1, 0) == Complex(-1.0));
  CHECK(h(1, 1) == Complex(0.0));
  Eigen::ComplexEigenSolver<Matrix> es(h, false);
  std::vector<double> re{es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-1.0));
  CHECK(re[1] == doctest::Approx(1.0));
}

TEST_CASE("build_hamiltonian rejects mismatched dimensions") {
  CHECK_THROWS_AS(CareProblem::make(Matrix::Zero(2, 2), Matrix::Zero(1, 1), Matrix::Zero(2, 2)),
                  IoError);
}

TEST_CASE("CareProblem::make enforces Hermiticity") {
  Matrix q(2, 2);
  q << 1.0, Complex(0.0, 0.5), Complex(0.0, 0.5), 1.0;  // symmetric, not Hermitian
  CHECK_THROWS_AS(CareProblem::make(Matrix::Zero(2, 2), q, Matrix::Identity(2, 2)), IoError);
}

TEST_CASE("Hamiltonian structure invariants on seeded instances") {
  Rng rng(42);
  const Matrix j_top = Matrix::Identity(4, 4);
  for (int trial = 0; trial < 6; ++trial) {
    auto prob = testutil::random_care_with_gap(4, 0.1, rng);
    const Matrix h = build_hamiltonian(prob).h;
    Matrix j = Matrix::Zero(8, 8);
    j.topRightCorner(4, 4) = j_top;
    j.bottomLeftCorner(4, 4) = -j_top;
    const Matrix jh = j * h;
    CHECK(hermiticity_defect(jh) <= 1e-10 * spectral_norm(h));

    // eigenvalue pairing lambda <-> -conj(lambda)
    Eigen::ComplexEigenSolver<Matrix> es(h, false);
    for (Index i = 0; i < 8; ++i) {
      const Complex lam = es.eigenvalues()(i);
      double best = 1e30;
      for (Index k = 0; k < 8; ++k) {
        best = std::min(best, std::abs(es.eigenvalues()(k) + std::conj(lam)));
      }
      CHECK(best <= 1e-8 * std::max(1.0, spectral_norm(h)));
    }
  }
}

TEST_CASE("spectral_split diagonal cases") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = -3.0;
  auto split = spectral_split(h);
  CHECK(split.delta == doctest::Approx(2.0));
  CHECK(split.antistable.size() == 1);
  CHECK(split.stable.size() == 1);
  CHECK_FALSE(split.has_imaginary);

  Matrix g(2, 2);
  g << 0.0, -1.0, -1.0, 0.0;
  auto s2 = spectral_split(g);
  CHECK(s2.delta == doctest::Approx(1.0));
  CHECK(s2.antistable.size() == 1);
  CHECK(s2.stable.size() == 1);
}

TEST_CASE("spectral_split flags imaginary eigenvalues") {
  Matrix h(2, 2);
  h << 0.0, 1.0, -1.0, 0.0;  // eigenvalues +/- i
  auto split = spectral_split(h);
  CHECK(split.has_imaginary);
  CHECK(split.delta == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("spectral_split matches dense eigensolver on seeded instance") {
  Rng rng(7);
  const Matrix h = testutil::random_gapped_hamiltonian(3, 0.15, rng);
  auto split = spectral_split(h);
  CHECK(split.stable.size() == 3);
  CHECK(split.antistable.size() == 3);
  Eigen::ComplexEigenSolver<Matrix> es(h, false);
  double delta = 1e30;
  for (Index i = 0; i < 6; ++i) delta = std::min(delta, std::abs(es.eigenvalues()(i).real()));
  CHECK(split.delta == doctest::Approx(delta).epsilon(1e-12));
}

TEST_CASE("sign_newton closed forms") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = -3.0;
  const Matrix s = sign_newton(h);
  CHECK(std::abs(s(0, 0) - Complex(1.0)) < 1e-12);
  CHECK(std::abs(s(1, 1) - Complex(-1.0)) < 1e-12);

  Matrix g(2, 2);
  g << 0.0, -1.0, -1.0, 0.0;  // involution: sign(G) = G
  const Matrix sg = sign_newton(g);
  CHECK(spectral_norm(Matrix(sg - g)) < 1e-12);
}

TEST_CASE("sign_newton matches eigendecomposition oracle and its invariants") {
  Rng rng(11);
  const Matrix h = testutil::random_gapped_hamiltonian(4, 0.2, rng);
  const double tol = 1e-12;
  const Matrix s = sign_newton(h, tol);
  const Matrix oracle = testutil::sign_oracle(h);
  CHECK(spectral_norm(Matrix(s - oracle)) < 1e-8);
  CHECK(spectral_norm(Matrix(s * s - Matrix::Identity(8, 8))) <= 10 * 1e-6);
  CHECK(spectral_norm(Matrix(s * h - h * s)) <= 1e-8 * spectral_norm(h));
}

TEST_CASE("sign_newton rejects imaginary spectra") {
  Matrix h(2, 2);
  h << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(sign_newton(h), SpectralError);
}

TEST_CASE("riesz_projector_exact closed forms") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = -1.0;
  const Matrix pi = riesz_projector_exact(h);
  CHECK(std::abs(pi(0, 0) - Complex(1.0)) < 1e-12);
  CHECK(std::abs(pi(1, 1) - Complex(0.0)) < 1e-12);

  Matrix g(2, 2);
  g << 0.0, -1.0, -1.0, 0.0;
  const Matrix pg = riesz_projector_exact(g);
  Matrix expect(2, 2);
  expect << 0.5, -0.5, -0.5, 0.5;
  CHECK(spectral_norm(Matrix(pg - expect)) < 1e-12);
}

TEST_CASE("riesz_projector_exact invariants on seeded instance") {
  Rng rng(13);
  const Matrix h = testutil::random_gapped_hamiltonian(3, 0.2, rng);
  const Matrix pi_a = riesz_projector_exact(h);
  CHECK(spectral_norm(Matrix(pi_a * pi_a - pi_a)) <= 1e-10);
  CHECK(std::abs(pi_a.trace().real() - 3.0) <= 1e-8);
  CHECK(std::abs(pi_a.trace().imag()) <= 1e-8);

  // complementary projector of -H picks the stable half
  const Matrix pi_s = riesz_projector_exact(Matrix(-h));
  CHECK(spectral_norm(Matrix(pi_a + pi_s - Matrix::Identity(6, 6))) <= 1e-9);

  // sign/projector consistency
  const Matrix s = sign_newton(h);
  CHECK(spectral_norm(Matrix(s - (2.0 * pi_a - Matrix::Identity(6, 6)))) <= 1e-8);

  // annihilates stable eigenvectors
  Eigen::ComplexEigenSolver<Matrix> es(h);
  for (Index i = 0; i < 6; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) {
      CHECK((pi_a * es.eigenvectors().col(i)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("riesz_projector_exact rejects imaginary eigenvalues") {
  Matrix h(2, 2);
  h << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(riesz_projector_exact(h), SpectralError);
}

TEST_CASE("solve_care_sign scalar and block identity instances") {
  auto p1 = CareProblem::make(Matrix::Zero(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  auto sol1 = solve_care_sign(p1);
  CHECK(std::abs(sol1.x(0, 0) - Complex(1.0)) < 1e-10);
  CHECK(sol1.stabilizing);

  auto p2 = CareProblem::make(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  auto sol2 = solve_care_sign(p2);
  CHECK(spectral_norm(Matrix(sol2.x - Matrix::Identity(2, 2))) < 1e-10);
  CHECK(sol2.residual_norm < 1e-10);
}

TEST_CASE("solve_care_sign matches the scalar quadratic-formula root") {
  // Riccati instance t b t + a t + t a + b = 0 mapped to P=-a, Q=b, R=-b.
  const double a = 1.1, b = 0.2;
  auto prob = CareProblem::make(mat1(-a), mat1(b), mat1(-b));
  auto sol = solve_care_sign(prob);
  const double t = testutil::scalar_riccati_root(a, b);
  CHECK(std::abs(sol.x(0, 0) - Complex(t)) < 1e-12);
  CHECK(sol.stabilizing);
}

TEST_CASE("solve_care_sign agrees with projector extraction on seeded instances") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 5);
    auto prob = testutil::random_care_with_gap(n, 0.25, rng);
    auto sol = solve_care_sign(prob);
    CHECK(sol.stabilizing);
    CHECK(sol.residual_norm <=
          1e-8 * (1.0 + spectral_norm(sol.x) * spectral_norm(build_hamiltonian(prob).h)));

    const Matrix pi_a = riesz_projector_exact(build_hamiltonian(prob).h);
    auto sol_pi = extract_solution_from_projector(pi_a, n, &prob);
    const double rel = spectral_norm(Matrix(sol.x - sol_pi.x)) /
                       std::max(1.0, spectral_norm(sol.x));
    CHECK(rel <= 1e-8);
  }
}

TEST_CASE("extract_solution_from_projector hand cases") {
  Matrix pi(2, 2);
  pi << 0.5, -0.5, -0.5, 0.5;
  auto sol = extract_solution_from_projector(pi, 1);
  CHECK(std::abs(sol.x(0, 0) - Complex(1.0)) < 1e-12);

  Matrix degenerate = Matrix::Zero(2, 2);
  degenerate(0, 0) = 1.0;  // second column block identically zero
  CHECK_THROWS_AS(extract_solution_from_projector(degenerate, 1), RankError);
}

TEST_CASE("extract_solution_from_projector on quadrature-computed projector") {
  Rng rng(23);
  auto prob = testutil::random_care_with_gap(4, 0.3, rng);
  const Matrix h = build_hamiltonian(prob).h;
  const auto split = spectral_split(h);
  const auto c = contour::select_parameters(std::max(spectral_norm(h), split.delta), split.delta);
  const auto rule = contour::quadrature_nodes(c, 160);
  const Matrix pi_m = contour::riesz_projector_quadrature(h, rule);
  auto sol_q = extract_solution_from_projector(pi_m, 4, &prob);
  auto sol_s = solve_care_sign(prob);
  CHECK(spectral_norm(Matrix(sol_q.x - sol_s.x)) <= 1e-8 * std::max(1.0, spectral_norm(sol_s.x)));
}

TEST_CASE("verify_solution residual, margin and branch flags") {
  auto prob = CareProblem::make(Matrix::Zero(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  auto good = verify_solution(prob, Matrix::Identity(1, 1));
  CHECK(good.residual_norm == doctest::Approx(0.0));
  CHECK(good.stability_margin == doctest::Approx(-1.0));
  CHECK(good.stabilizing);

  auto anti = verify_solution(prob, Matrix(-Matrix::Identity(1, 1)));
  CHECK(anti.residual_norm == doctest::Approx(0.0));
  CHECK(anti.stability_margin == doctest::Approx(1.0));
  CHECK_FALSE(anti.stabilizing);
}

TEST_CASE("verify_solution first-order response to perturbation") {
  Rng rng(29);
  auto prob = testutil::random_care_with_gap(3, 0.25, rng);
  auto sol = solve_care_sign(prob);
  const Matrix e = testutil::random_hermitian(3, rng, 1.0);
  const double eps = 1e-3;
  const Matrix xp = sol.x + eps * e;
  auto pert = verify_solution(prob, xp);
  // residual of X + eps E is O(eps * ||gradient||); sanity-bound the constant
  const double bound = eps * spectral_norm(e) *
                       (2.0 * spectral_norm(prob.q) * spectral_norm(sol.x) +
                        2.0 * spectral_norm(prob.p)) +
                       10.0 * eps * eps * spectral_norm(prob.q);
  CHECK(pert.residual_norm <= bound + sol.residual_norm + 1e-10);
  CHECK(pert.residual_norm >= 1e-6);  // genuinely perturbed
}

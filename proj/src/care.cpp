#include "qcare/care.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace qcare {

namespace {

double default_imag_tol(const Matrix& h, double imag_tol) {
  if (imag_tol >= 0.0) return imag_tol;
  return 1e-10 * spectral_norm(h);
}

// Least-squares solve A X = B by SVD with relative rank cutoff. Throws when
// sigma_min falls below rtol * sigma_max.
Matrix svd_least_squares(const Matrix& a, const Matrix& b, double rank_rtol,
                         const std::string& stage) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sig = svd.singularValues();
  const double smax = sig(0);
  const double smin = sig(sig.size() - 1);
  if (!(smax > 0.0) || smin < rank_rtol * smax) {
    throw RankError(stage, "rank-deficient system: sigma_min=" + std::to_string(smin) +
                               " sigma_max=" + std::to_string(smax));
  }
  Matrix ut_b = svd.matrixU().adjoint() * b;
  for (Index i = 0; i < sig.size(); ++i) ut_b.row(i) /= sig(i);
  return svd.matrixV() * ut_b;
}

}  // namespace

CareProblem CareProblem::make(Matrix p, Matrix q, Matrix r, double herm_rtol) {
  CareProblem prob;
  prob.n = p.rows();
  if (prob.n < 1 || p.cols() != prob.n || q.rows() != prob.n || q.cols() != prob.n ||
      r.rows() != prob.n || r.cols() != prob.n) {
    throw IoError("care_problem", "P, Q, R must be square matrices of equal dimension");
  }
  const double scale_q = std::max(1.0, spectral_norm(q));
  const double scale_r = std::max(1.0, spectral_norm(r));
  if (hermiticity_defect(q) > herm_rtol * scale_q) {
    throw IoError("care_problem", "Q is not Hermitian within tolerance");
  }
  if (hermiticity_defect(r) > herm_rtol * scale_r) {
    throw IoError("care_problem", "R is not Hermitian within tolerance");
  }
  prob.p = std::move(p);
  prob.q = std::move(q);
  prob.r = std::move(r);
  return prob;
}

HamiltonianMatrix build_hamiltonian(const CareProblem& prob) {
  const Index n = prob.n;
  HamiltonianMatrix out;
  out.n = n;
  out.h = Matrix(2 * n, 2 * n);
  out.h.topLeftCorner(n, n) = prob.p;
  out.h.topRightCorner(n, n) = -prob.q;
  out.h.bottomLeftCorner(n, n) = -prob.r;
  out.h.bottomRightCorner(n, n) = -prob.p.adjoint();
  return out;
}

SpectralSplit spectral_split(const Matrix& h, double imag_tol) {
  const double tol = default_imag_tol(h, imag_tol);
  Eigen::ComplexEigenSolver<Matrix> es(h, /*computeEigenvectors=*/false);
  SpectralSplit split;
  split.delta = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < h.rows(); ++i) {
    const Complex lam = es.eigenvalues()(i);
    split.delta = std::min(split.delta, std::abs(lam.real()));
    if (std::abs(lam.real()) <= tol) split.has_imaginary = true;
    if (lam.real() >= 0.0) {
      split.antistable.push_back(lam);
    } else {
      split.stable.push_back(lam);
    }
  }
  if (h.rows() == 0) split.delta = 0.0;
  return split;
}

SpectralSplit spectral_split(const HamiltonianMatrix& h, double imag_tol) {
  return spectral_split(h.h, imag_tol);
}

Matrix sign_newton(const Matrix& h, double tol, int max_iter) {
  Matrix s = h;
  const Matrix eye = Matrix::Identity(h.rows(), h.cols());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::PartialPivLU<Matrix> lu(s);
    const double rc = lu.rcond();
    if (!(rc > 1e-15)) {
      throw SpectralError("sign_newton",
                          "singular iterate (eigenvalue on or near the imaginary axis)");
    }
    const Matrix next = 0.5 * (s + lu.solve(eye));
    const double step = spectral_norm(Matrix(next - s));
    const double scale = spectral_norm(s);
    s = next;
    if (step <= tol * scale) return s;
  }
  throw SpectralError("sign_newton", "no convergence after " + std::to_string(max_iter) +
                                         " iterations");
}

Matrix riesz_projector_exact(const Matrix& h, double imag_tol) {
  const double tol = default_imag_tol(h, imag_tol);
  Eigen::ComplexEigenSolver<Matrix> es(h);
  for (Index i = 0; i < h.rows(); ++i) {
    if (std::abs(es.eigenvalues()(i).real()) <= tol) {
      throw SpectralError("riesz_projector_exact", "eigenvalue on the imaginary axis");
    }
  }
  Vector indicator(h.rows());
  for (Index i = 0; i < h.rows(); ++i) {
    indicator(i) = es.eigenvalues()(i).real() > 0.0 ? 1.0 : 0.0;
  }
  const Matrix& v = es.eigenvectors();
  Eigen::PartialPivLU<Matrix> lu(v);
  return v * indicator.asDiagonal() * lu.inverse();
}

CareSolution solve_care_sign(const CareProblem& prob, double rank_rtol) {
  const HamiltonianMatrix ham = build_hamiltonian(prob);
  const Index n = prob.n;
  const Matrix s = sign_newton(ham.h);
  const Matrix sp = s + Matrix::Identity(2 * n, 2 * n);
  const Matrix s1 = sp.leftCols(n);
  const Matrix s2 = sp.rightCols(n);
  const Matrix x = svd_least_squares(s2, Matrix(-s1), rank_rtol, "solve_care_sign");
  return verify_solution(prob, x);
}

CareSolution extract_solution_from_projector(const Matrix& pi_a, Index n,
                                             const CareProblem* prob, double rank_rtol) {
  if (pi_a.rows() != 2 * n || pi_a.cols() != 2 * n) {
    throw IoError("extract_solution_from_projector", "projector must be 2n x 2n");
  }
  const Matrix pi1 = pi_a.leftCols(n);
  const Matrix pi2 = pi_a.rightCols(n);
  const Matrix x = svd_least_squares(pi2, Matrix(-pi1), rank_rtol,
                                     "extract_solution_from_projector");
  if (prob != nullptr) return verify_solution(*prob, x);
  CareSolution sol;
  sol.x = x;
  sol.residual_norm = std::numeric_limits<double>::quiet_NaN();
  sol.stability_margin = std::numeric_limits<double>::quiet_NaN();
  sol.hermiticity_defect = hermiticity_defect(x);
  return sol;
}

CareSolution verify_solution(const CareProblem& prob, const Matrix& x) {
  if (x.rows() != prob.n || x.cols() != prob.n) {
    throw IoError("verify_solution", "solution dimension mismatch");
  }
  CareSolution sol;
  sol.x = x;
  const Matrix residual =
      x * prob.q * x - x * prob.p - prob.p.adjoint() * x - prob.r;
  sol.residual_norm = spectral_norm(residual);
  const Matrix closed_loop = prob.p - prob.q * x;
  Eigen::ComplexEigenSolver<Matrix> es(closed_loop, /*computeEigenvectors=*/false);
  double margin = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < prob.n; ++i) {
    margin = std::max(margin, es.eigenvalues()(i).real());
  }
  sol.stability_margin = margin;
  sol.hermiticity_defect = hermiticity_defect(x);
  sol.stabilizing = margin < 0.0;
  return sol;
}

}  // namespace qcare

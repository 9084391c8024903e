#pragma once

#include <vector>

#include "qcare/errors.hpp"
#include "qcare/linalg.hpp"

namespace qcare {

// Continuous-time algebraic Riccati equation
//
//     X Q X - X P - P^† X - R = 0
//
// with Q, R Hermitian. The associated 2n x 2n block matrix
// [[P, -Q], [-R, -P^†]] has J-Hermitian structure and a spectrum symmetric
// about the imaginary axis; its antistable invariant subspace carries the
// stabilizing solution.

struct CareProblem {
  Matrix p;
  Matrix q;
  Matrix r;
  Index n = 0;

  // Validates dimensions and Hermiticity of Q, R (relative tolerance).
  static CareProblem make(Matrix p, Matrix q, Matrix r, double herm_rtol = 1e-12);
};

struct HamiltonianMatrix {
  Matrix h;  // 2n x 2n
  Index n = 0;
};

struct SpectralSplit {
  double delta = 0.0;  // min over eigenvalues of |Re(lambda)|
  std::vector<Complex> stable;
  std::vector<Complex> antistable;
  bool has_imaginary = false;
};

struct CareSolution {
  Matrix x;
  double residual_norm = 0.0;     // ||XQX - XP - P^†X - R||
  double stability_margin = 0.0;  // max Re eig(P - QX)
  double hermiticity_defect = 0.0;
  bool stabilizing = false;
};

// Assembles [[P, -Q], [-R, -P^†]].
HamiltonianMatrix build_hamiltonian(const CareProblem& prob);

// Partitions the spectrum by the sign of the real part. Eigenvalues with
// |Re| <= imag_tol raise the has_imaginary flag (they are still binned by
// sign). imag_tol < 0 selects the default 1e-10 * ||H||.
SpectralSplit spectral_split(const Matrix& h, double imag_tol = -1.0);
SpectralSplit spectral_split(const HamiltonianMatrix& h, double imag_tol = -1.0);

// Newton iteration S <- (S + S^-1)/2 from S0 = H. Plain (unscaled) variant,
// stopping once ||S_{k+1} - S_k|| <= tol * ||S_k||.
Matrix sign_newton(const Matrix& h, double tol = 1e-12, int max_iter = 100);

// Antistable spectral projector (I + sign(H))/2 computed from a dense
// eigendecomposition. Used as the classical reference for the quadrature
// and encoding paths.
Matrix riesz_projector_exact(const Matrix& h, double imag_tol = -1.0);

// Stabilizing solution via the sign method: split sign(H) + I = (S1 S2)
// into column blocks and solve S2 X = -S1 in the least-squares sense.
CareSolution solve_care_sign(const CareProblem& prob, double rank_rtol = 1e-10);

// Splits Pi_a = (Pi1 Pi2) and returns X = -Pi2^+ Pi1. Residual diagnostics
// are attached when the originating problem is supplied (NaN otherwise).
CareSolution extract_solution_from_projector(const Matrix& pi_a, Index n,
                                             const CareProblem* prob = nullptr,
                                             double rank_rtol = 1e-10);

// Residual, closed-loop stability margin and Hermiticity defect of X.
CareSolution verify_solution(const CareProblem& prob, const Matrix& x);

}  // namespace qcare

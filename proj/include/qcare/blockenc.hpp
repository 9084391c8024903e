#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qcare/contour.hpp"
#include "qcare/errors.hpp"
#include "qcare/linalg.hpp"

namespace qcare::blockenc {

// Emulated block-encoding: an explicit unitary U together with the
// normalization alpha, the left/right logical dimensions and ancilla
// counts, and an error bound on the encoded corner block
//
//   A_tilde = alpha * (<0^aL| (x) I) U (|0^aR> (x) I) = alpha * U[0:nL, 0:nR].
//
// The physical ancilla counts describe the stored unitary
// (2^aL * nL = 2^aR * nR = dim U); the meta counts carry the ancilla
// arithmetic of the underlying circuit constructions, which the compact
// emulation does not materialize.
struct BlockEncoding {
  Matrix u;
  double alpha = 1.0;
  Index n_left = 0;
  Index n_right = 0;
  int anc_left = 0;
  int anc_right = 0;
  int meta_anc_left = 0;
  int meta_anc_right = 0;
  double eps = 0.0;

  bool square() const { return n_left == n_right; }
  Matrix block() const { return alpha * u.topLeftCorner(n_left, n_right); }
  BlockEncoding adjoint() const;
  double unitarity_defect() const;
  void check_shape(const std::string& stage) const;
};

// Exact one-ancilla-per-side unitary dilation with corner block A/alpha.
// Rectangular targets are supported when nL/nR is a power of two.
BlockEncoding dilation_encode(const Matrix& a, double alpha);

Matrix extract_block(const BlockEncoding& be);

// PREP/SELECT linear combination of unitaries. Complex coefficients are
// split into modulus (loaded in PREP) and phase (folded into the selected
// unitary). Exact: the result encodes sum_k c_k U_k at alpha = sum |c_k|.
BlockEncoding lcu_combine(const std::vector<std::pair<Complex, Matrix>>& terms);

// Two-term combination encoding z I - H at alpha = alpha_h + |z|.
// z = 0 degenerates to the negated input.
BlockEncoding shift_encode(const BlockEncoding& h, Complex z);

// Odd polynomial on the Chebyshev basis T_1, T_3, ..., approximating
// 3/(8 kappa x) on [1/kappa, 1] with |P| <= 1 on [-1, 1].
struct OddPolynomial {
  std::vector<double> cheb;  // coefficient of T_{2j+1} at slot j
  int degree = 1;
  double kappa = 1.0;
  double eps_pol = 0.0;       // target uniform error on [1/kappa, 1]
  double eps_achieved = 0.0;  // grid-measured error after truncation/capping
  double max_abs = 0.0;       // grid-measured max of |P| on [-1, 1]

  double evaluate(double x) const;
};

// Truncated odd-Chebyshev expansion of the kernel (1 - (1 - x^2)^b)/x with
// b = ceil(kappa^2 log(kappa/eps_pol)), multiplied by an even smoothing
// factor that keeps |P| <= 1 below 1/kappa, rescaled by 3/(8 kappa).
OddPolynomial build_inverse_polynomial(double kappa, double eps_pol, int degree_cap = 200001);

// Singular-value-transform emulation: SVD of the subnormalized block,
// polynomial applied to the singular values, result re-dilated into a fresh
// unitary. Error bound follows the generic QSVT robustness rule.
BlockEncoding qsvt_apply_odd(const BlockEncoding& be, const OddPolynomial& poly);

// Inverse (square) or pseudoinverse (rectangular, full column rank) via the
// singular-value transform with the 3/(8 kappa x) polynomial. The reported
// bound is the minimum of the generic robustness rule and a perturbation
// bound specific to the inverse; both are recorded.
struct InverseEncoding {
  BlockEncoding be;
  int degree = 0;
  double eps_rule = 0.0;          // alpha' (eps_pol + 4 m sqrt(eps/alpha))
  double eps_perturbation = 0.0;  // alpha' eps_pol + Wedin-type term
  double sigma_min = 0.0;         // of the subnormalized encoded block
};

BlockEncoding invert_encode(const BlockEncoding& be, double kappa, double eps_pol);
InverseEncoding invert_encode_detailed(const BlockEncoding& be, double kappa,
                                       double eps_pol, double sigma_slack = 0.0,
                                       const std::string& stage = "invert_encode");

struct PipelineReport {
  double alpha_h = 0.0;
  double alpha_pi = 0.0;
  double alpha_pi_bound = 0.0;  // (8/3) M_gamma d_gamma (1 + b_gamma/alpha_h)
  double eps_pi = 0.0;
  double eps_trap = 0.0;
  double alpha_x = 0.0;
  double eps_x = 0.0;
  int m_pi = 0;
  int m_plus = 0;
  long long query_count_h = 0;     // theorem query figure (m_pi)
  long long emulation_solves = 0;  // 2 * m_pi * M bookkept by the emulation
  int node_count = 0;
  double kappa = 0.0;
  double kappa2 = 0.0;
  double eps_pol_pi = 0.0;
  double eps_pol_plus = 0.0;
  double eps_plus = 0.0;
  double eps_plus_rule = 0.0;
  double eps_plus_perturbation = 0.0;
  double eta = 0.0;
  double chi = 0.0;
  double m_gamma = 0.0;
  double xs_norm = 0.0;
  double eps_x_target = 0.0;
  double pi_oracle_deviation = -1.0;  // ||encoded block - exact projector||
  double x_oracle_deviation = -1.0;   // ||encoded block - classical solution||
  std::vector<std::pair<std::string, int>> ancilla_ledger;
};

// Weighted combination of per-node QSVT resolvents over the quadrature
// rule: block-encoding of the antistable projector.
std::pair<BlockEncoding, PipelineReport> riesz_encode(const BlockEncoding& h,
                                                      const contour::QuadratureRule& rule,
                                                      const contour::StripBound& bounds,
                                                      double eps_pol_pi);

// Rectangular encodings of the left and right column blocks of a square
// encoded matrix of even logical dimension.
std::pair<BlockEncoding, BlockEncoding> column_blocks(const BlockEncoding& pi);

BlockEncoding pseudoinverse_encode(const BlockEncoding& pi2, double kappa2,
                                   double eps_pol_plus);

// Encodes A1 A2 at alpha1 * alpha2 by direct dilation of the block product;
// eps_12 = alpha1 eps2 + (alpha2 + eps2) eps1.
BlockEncoding product_encode(const BlockEncoding& be1, const BlockEncoding& be2);

// kappa_2 choice alpha_pi sqrt(1 + ||X_s||^2), always >= alpha_pi/sigma_min(Pi_2).
double kappa2_from_solution(double alpha_pi, double xs_norm);

struct PipelineConfig {
  double eps_x_target = 1e-2;
  double eta_fraction = 0.5;  // working strip width as a fraction of chi
  int samples = 96;
  double safety = 1.25;
  int node_override = 0;  // 0 = derive from the error budget
  Index max_dim = 16384;  // cap on the physical LCU dimension
  double xs_norm_hint = -1.0;  // < 0: take ||X_s|| from the classical solve
  double projector_share = 0.5;  // fraction of eps_x budgeted to the projector path
  double pseudo_share = 0.25;    // fraction budgeted to the pseudoinverse polynomial
  bool compare_oracle = true;
  std::uint64_t unused = 0;
};

// Full chain: contour bounds -> node budget -> projector encoding -> column
// split -> pseudoinverse -> product with the negated left block.
std::pair<BlockEncoding, PipelineReport> care_solution_encode(
    const BlockEncoding& h, const contour::SmoothedSemicircle& c,
    const PipelineConfig& config = {});

}  // namespace qcare::blockenc

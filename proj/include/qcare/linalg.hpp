#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace qcare {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Spectral norm (largest singular value). Jacobi for small blocks,
// divide-and-conquer beyond that.
inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() <= 32 && a.cols() <= 32) {
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
  }
  return Eigen::BDCSVD<Matrix>(a).singularValues()(0);
}

inline double spectral_norm(const RealMatrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(a).singularValues()(0);
}

inline double smallest_singular_value(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline double hermiticity_defect(const Matrix& a) {
  return spectral_norm(Matrix(a - a.adjoint()));
}

// Completes a matrix with orthonormal columns to a full unitary.
// The first v.cols() columns of the result equal v exactly.
inline Matrix unitary_completion(const Matrix& v) {
  const Index d = v.rows();
  const Index k = v.cols();
  Matrix u(d, d);
  u.leftCols(k) = v;
  if (k < d) {
    Eigen::HouseholderQR<Matrix> qr(v);
    Matrix q = qr.householderQ();
    u.rightCols(d - k) = q.rightCols(d - k);
  }
  return u;
}

// Deterministic pairwise (tree) summation over a list of equal-shape
// matrices. The reduction order depends only on the list length, so the
// result is reproducible no matter how terms were produced.
inline Matrix pairwise_sum(std::vector<Matrix>& terms, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return terms[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(terms, lo, mid) + pairwise_sum(terms, mid, hi);
}

inline Matrix pairwise_sum(std::vector<Matrix>& terms) {
  return pairwise_sum(terms, 0, terms.size());
}

}  // namespace qcare

#include "qcare/blockenc.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qcare/care.hpp"

namespace qcare::blockenc {

namespace {

constexpr double kWedinConstant = 1.6180339887498949;  // (1 + sqrt 5)/2

int ceil_log2(long long v) {
  int bits = 0;
  while ((1ll << bits) < v) ++bits;
  return bits;
}

bool is_pow2(long long v) { return v > 0 && (v & (v - 1)) == 0; }

// Hermitian PSD square root of I - B^dagger B from the SVD of B, clamped
// against tiny negative rounding.
Matrix residual_root(const Eigen::JacobiSVD<Matrix>& svd, Index n, double tol) {
  const auto& sig = svd.singularValues();
  Eigen::VectorXd root(sig.size());
  for (Index i = 0; i < sig.size(); ++i) {
    double s = sig(i);
    if (s > 1.0) {
      if (s > 1.0 + tol) {
        throw IoError("dilation_encode", "block exceeds the declared normalization");
      }
      s = 1.0;
    }
    root(i) = std::sqrt(std::max(0.0, 1.0 - s * s));
  }
  const Matrix& v = svd.matrixV();
  Matrix out = v * root.asDiagonal() * v.adjoint();
  (void)n;
  return out;
}

}  // namespace

BlockEncoding BlockEncoding::adjoint() const {
  BlockEncoding out;
  out.u = u.adjoint();
  out.alpha = alpha;
  out.n_left = n_right;
  out.n_right = n_left;
  out.anc_left = anc_right;
  out.anc_right = anc_left;
  out.meta_anc_left = meta_anc_right;
  out.meta_anc_right = meta_anc_left;
  out.eps = eps;
  return out;
}

double BlockEncoding::unitarity_defect() const {
  // Frobenius norm: an upper bound on the spectral defect, cheap at the
  // dimensions the outer LCU reaches.
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

void BlockEncoding::check_shape(const std::string& stage) const {
  const Index dim = u.rows();
  if (u.cols() != dim || n_left < 1 || n_right < 1 ||
      (Index(1) << anc_left) * n_left != dim || (Index(1) << anc_right) * n_right != dim) {
    throw IoError(stage, "inconsistent block-encoding shape");
  }
}

BlockEncoding dilation_encode(const Matrix& a, double alpha) {
  const Index nl = a.rows();
  const Index nr = a.cols();
  if (nl < 1 || nr < 1) throw IoError("dilation_encode", "empty matrix");
  const double norm = spectral_norm(a);
  if (alpha < 1.0 - 1e-12 || alpha < norm * (1.0 - 1e-12)) {
    throw IoError("dilation_encode", "alpha must satisfy alpha >= max(1, ||A||)");
  }
  const Index big = std::max(nl, nr);
  const Index small = std::min(nl, nr);
  if (big % small != 0 || !is_pow2(big / small)) {
    throw IoError("dilation_encode", "nL/nR must be a power of two");
  }
  const Index dim = 2 * big;

  const Matrix b = a / alpha;
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix z = residual_root(svd, nr, 1e-9);

  Matrix first(dim, nr);
  first.setZero();
  first.topRows(nl) = b;
  // clamp the block itself if a singular value crept above one
  if (svd.singularValues()(0) > 1.0) {
    Eigen::VectorXd clamped = svd.singularValues();
    for (Index i = 0; i < clamped.size(); ++i) clamped(i) = std::min(1.0, clamped(i));
    first.topRows(nl) = svd.matrixU() * clamped.asDiagonal() * svd.matrixV().adjoint();
  }
  first.middleRows(nl, nr) = z;

  BlockEncoding be;
  be.u = unitary_completion(first);
  be.alpha = alpha;
  be.n_left = nl;
  be.n_right = nr;
  be.anc_left = ceil_log2(dim / nl);
  be.anc_right = ceil_log2(dim / nr);
  be.meta_anc_left = be.anc_left;
  be.meta_anc_right = be.anc_right;
  be.eps = 0.0;
  be.check_shape("dilation_encode");
  return be;
}

Matrix extract_block(const BlockEncoding& be) { return be.block(); }

BlockEncoding lcu_combine(const std::vector<std::pair<Complex, Matrix>>& terms) {
  if (terms.empty()) throw IoError("lcu_combine", "need at least one term");
  const Index d = terms[0].second.rows();
  double l1 = 0.0;
  for (const auto& [coeff, unitary] : terms) {
    if (unitary.rows() != d || unitary.cols() != d) {
      throw IoError("lcu_combine", "all unitaries must share one dimension");
    }
    l1 += std::abs(coeff);
  }
  if (!(l1 > 0.0)) throw IoError("lcu_combine", "all coefficients zero");

  const int k = static_cast<int>(terms.size());
  const int anc = ceil_log2(k);
  const Index branches = Index(1) << anc;

  Matrix prep_col = Matrix::Zero(branches, 1);
  for (int i = 0; i < k; ++i) prep_col(i, 0) = std::sqrt(std::abs(terms[i].first) / l1);
  const Matrix prep = unitary_completion(prep_col);

  const Index dim = branches * d;
  Matrix w = Matrix::Zero(dim, dim);
  const Matrix eye = Matrix::Identity(d, d);
  // W_{ij} = delta_ij I + sum_k conj(P(k,i)) P(k,j) (phase_k U_k - I)
  std::vector<Matrix> shifted;
  shifted.reserve(k);
  for (int i = 0; i < k; ++i) {
    const Complex coeff = terms[i].first;
    const Complex phase = std::abs(coeff) > 0.0 ? coeff / std::abs(coeff) : Complex(1.0);
    shifted.push_back(Matrix(phase * terms[i].second - eye));
  }
  for (Index i = 0; i < branches; ++i) {
    for (Index j = 0; j < branches; ++j) {
      Matrix blockij = (i == j) ? eye : Matrix(Matrix::Zero(d, d));
      for (int t = 0; t < k; ++t) {
        const Complex c = std::conj(prep(t, i)) * prep(t, j);
        if (std::abs(c) > 0.0) blockij += c * shifted[t];
      }
      w.block(i * d, j * d, d, d) = blockij;
    }
  }

  BlockEncoding be;
  be.u = std::move(w);
  be.alpha = l1;
  be.n_left = d;
  be.n_right = d;
  be.anc_left = anc;
  be.anc_right = anc;
  be.meta_anc_left = anc;
  be.meta_anc_right = anc;
  be.eps = 0.0;
  be.check_shape("lcu_combine");
  return be;
}

BlockEncoding shift_encode(const BlockEncoding& h, Complex z) {
  if (!h.square()) throw IoError("shift_encode", "requires a square encoding");
  if (std::abs(z) == 0.0) {
    BlockEncoding out = h;
    out.u = -h.u;
    return out;
  }
  const Index d = h.u.rows();
  std::vector<std::pair<Complex, Matrix>> terms;
  terms.emplace_back(z, Matrix(Matrix::Identity(d, d)));
  terms.emplace_back(Complex(-h.alpha), h.u);
  BlockEncoding combined = lcu_combine(terms);
  combined.n_left = h.n_left;
  combined.n_right = h.n_right;
  combined.anc_left = ceil_log2(combined.u.rows() / h.n_left);
  combined.anc_right = combined.anc_left;
  combined.meta_anc_left = h.meta_anc_left + 1;
  combined.meta_anc_right = h.meta_anc_right + 1;
  combined.eps = h.eps;
  combined.check_shape("shift_encode");
  return combined;
}

double OddPolynomial::evaluate(double x) const {
  // Clenshaw over the full Chebyshev series with zero even coefficients.
  double b1 = 0.0, b2 = 0.0;
  for (int k = degree; k >= 1; --k) {
    const double ak = (k % 2 == 1) ? cheb[(k - 1) / 2] : 0.0;
    const double b = ak + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b;
  }
  return x * b1 - b2;  // a_0 = 0
}

namespace {

// Chebyshev coefficients of the odd kernel (1 - (1 - x^2)^b)/x:
// coefficient of T_{2j+1} is 4 (-1)^j 2^{-2b} sum_{i=j+1}^{b} C(2b, b+i).
std::vector<double> kernel_odd_coeffs(long long b, double drop_tol) {
  std::vector<double> t(b + 1);
  t[0] = std::exp(std::lgamma(2.0 * b + 1.0) - 2.0 * std::lgamma(b + 1.0) -
                  2.0 * b * std::log(2.0));
  for (long long i = 0; i < b; ++i) {
    t[i + 1] = t[i] * static_cast<double>(b - i) / static_cast<double>(b + i + 1);
  }
  std::vector<double> suffix(b + 2, 0.0);
  for (long long i = b; i >= 1; --i) suffix[i] = suffix[i + 1] + t[i];
  std::vector<double> c;
  c.reserve(b);
  for (long long j = 0; j < b; ++j) {
    const double mag = 4.0 * suffix[j + 1];
    if (j > 2 && mag < drop_tol) break;
    c.push_back(((j % 2 == 0) ? 1.0 : -1.0) * mag);
  }
  return c;
}

// Even Chebyshev coefficients of (1 - x^2)^b: slot i holds the coefficient
// of T_{2i}.
std::vector<double> even_power_coeffs(long long b, double drop_tol) {
  std::vector<double> v(b + 1);
  v[0] = std::exp(std::lgamma(2.0 * b + 1.0) - 2.0 * std::lgamma(b + 1.0) -
                  2.0 * b * std::log(2.0));
  for (long long i = 0; i < b; ++i) {
    v[i + 1] = v[i] * static_cast<double>(b - i) / static_cast<double>(b + i + 1);
  }
  std::vector<double> c;
  c.push_back(v[0]);
  for (long long i = 1; i <= b; ++i) {
    const double mag = 2.0 * v[i];
    if (i > 2 && mag < drop_tol) break;
    c.push_back(((i % 2 == 0) ? 1.0 : -1.0) * mag);
  }
  return c;
}

// (sum a_i T_{2i}) (sum b_j T_{2j}) -> even series.
std::vector<double> multiply_even_even(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double half = 0.5 * a[i] * b[j];
      out[i + j] += half;
      out[i >= j ? i - j : j - i] += half;
    }
  }
  return out;
}

// (sum c_j T_{2j+1}) (sum r_m T_{2m}) -> odd series.
std::vector<double> multiply_odd_even(const std::vector<double>& c,
                                      const std::vector<double>& r) {
  std::vector<double> out(c.size() + r.size() - 1, 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (std::size_t m = 0; m < r.size(); ++m) {
      const double half = 0.5 * c[j] * r[m];
      out[j + m] += half;
      // |2j+1 - 2m| is odd; slot index of T_{|2j+1-2m|}
      if (j + 1 > m) {
        out[j - m] += half;
      } else {
        out[m - j - 1] += half;
      }
    }
  }
  return out;
}

}  // namespace

OddPolynomial build_inverse_polynomial(double kappa, double eps_pol, int degree_cap) {
  if (!(kappa >= 1.0)) throw IoError("build_inverse_polynomial", "kappa must be >= 1");
  if (!(eps_pol > 0.0 && eps_pol < 0.5)) {
    throw IoError("build_inverse_polynomial", "eps_pol must lie in (0, 1/2)");
  }

  const long long b =
      std::max<long long>(1, static_cast<long long>(std::ceil(
                                 kappa * kappa * std::log(kappa / eps_pol))));
  std::vector<double> series = kernel_odd_coeffs(b, 1e-20);

  // Even smoothing factor (1 - (1 - x^2)^{b_r})^3 keeping |P| <= 1 below the
  // approximation window; on [1/kappa, 1] it deviates from one by O(eps).
  const int smoothing_power = 3;
  const long long br = std::max<long long>(
      1, static_cast<long long>(
             std::ceil(kappa * kappa * std::log(3.0 * smoothing_power / eps_pol))));
  std::vector<double> decay = even_power_coeffs(br, 1e-18);
  std::vector<double> rect(decay.size(), 0.0);
  for (std::size_t i = 0; i < decay.size(); ++i) rect[i] = -decay[i];
  rect[0] += 1.0;
  std::vector<double> rect_pow = rect;
  for (int p = 1; p < smoothing_power; ++p) rect_pow = multiply_even_even(rect_pow, rect);
  series = multiply_odd_even(series, rect_pow);

  const double scale = 3.0 / (8.0 * kappa);
  for (double& v : series) v *= scale;

  // tail truncation at the first coefficient below eps_pol/(4 * degree)
  const double tail_tol = eps_pol / (4.0 * (2.0 * static_cast<double>(series.size()) + 1.0));
  std::size_t keep = series.size();
  for (std::size_t j = 3; j < series.size(); ++j) {
    if (std::abs(series[j]) < tail_tol) {
      keep = j;
      break;
    }
  }
  series.resize(keep);

  OddPolynomial poly;
  poly.cheb = std::move(series);
  poly.degree = 2 * static_cast<int>(poly.cheb.size()) - 1;
  poly.kappa = kappa;
  poly.eps_pol = eps_pol;
  if (poly.degree > degree_cap) {
    throw RankError("build_inverse_polynomial",
                    "degree " + std::to_string(poly.degree) + " exceeds the cap; kappa/eps_pol "
                    "outside the supported range");
  }

  // grid verification on [0, 1] (odd symmetry covers [-1, 0])
  const int grid = std::max(10000, 4 * poly.degree);
  double max_abs = 0.0;
  for (int i = 0; i <= grid; ++i) {
    max_abs = std::max(max_abs, std::abs(poly.evaluate(static_cast<double>(i) / grid)));
  }
  if (max_abs > 1.0) {
    const double rescale = 1.0 / (max_abs * (1.0 + 1e-12));
    for (double& v : poly.cheb) v *= rescale;
    max_abs = 1.0;
  }
  poly.max_abs = max_abs;

  double err = 0.0;
  const int window = 10000;
  for (int i = 0; i <= window; ++i) {
    const double x = 1.0 / kappa + (1.0 - 1.0 / kappa) * static_cast<double>(i) / window;
    err = std::max(err, std::abs(poly.evaluate(x) - 3.0 / (8.0 * kappa * x)));
  }
  poly.eps_achieved = err;
  if (err > eps_pol) {
    throw RankError("build_inverse_polynomial",
                    "achieved error " + std::to_string(err) +
                        " misses the target; kappa/eps_pol outside the supported range");
  }
  return poly;
}

BlockEncoding qsvt_apply_odd(const BlockEncoding& be, const OddPolynomial& poly) {
  be.check_shape("qsvt_apply_odd");
  const Matrix sub = be.u.topLeftCorner(be.n_left, be.n_right);
  Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd transformed(svd.singularValues().size());
  for (Index i = 0; i < transformed.size(); ++i) {
    transformed(i) = std::clamp(poly.evaluate(svd.singularValues()(i)), -1.0, 1.0);
  }
  const Matrix target =
      svd.matrixU() * transformed.asDiagonal() * svd.matrixV().adjoint();

  BlockEncoding out = dilation_encode(target, 1.0);
  out.eps = poly.eps_pol + 4.0 * poly.degree * std::sqrt(be.eps / be.alpha);
  out.meta_anc_left = be.meta_anc_left + 1;
  out.meta_anc_right = be.meta_anc_right + 1;
  return out;
}

InverseEncoding invert_encode_detailed(const BlockEncoding& be, double kappa,
                                       double eps_pol, double sigma_slack,
                                       const std::string& stage) {
  const OddPolynomial poly = build_inverse_polynomial(kappa, eps_pol);
  return [&] {
    InverseEncoding out;
    be.check_shape(stage);
    const Matrix sub = be.u.topLeftCorner(be.n_left, be.n_right);
    Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sig = svd.singularValues();
    const double sig_max = sig(0);
    const double sig_min = sig(sig.size() - 1);
    out.sigma_min = sig_min;
    if (sig_max > 1.0 + 1e-9 || sig_min < 1.0 / kappa - sigma_slack - 1e-12) {
      throw RankError(stage, "singular values of the encoded block leave [1/kappa, 1]: "
                             "sigma_min=" + std::to_string(sig_min) +
                             " sigma_max=" + std::to_string(sig_max) +
                             " 1/kappa=" + std::to_string(1.0 / kappa));
    }

    BlockEncoding transformed = qsvt_apply_odd(be.adjoint(), poly);
    const double alpha_out = 8.0 * kappa / (3.0 * be.alpha);

    // polynomial deviation at the actual singular values (covers slack
    // excursions below 1/kappa)
    double pol_err = poly.eps_pol;
    for (Index i = 0; i < sig.size(); ++i) {
      if (sig(i) > 0.0) {
        pol_err = std::max(pol_err, std::abs(poly.evaluate(sig(i)) -
                                             3.0 / (8.0 * kappa * sig(i))));
      }
    }

    out.degree = poly.degree;
    out.eps_rule = alpha_out * (pol_err + 4.0 * poly.degree * std::sqrt(be.eps / be.alpha));

    // inverse-specific propagation: alpha' pol_err + Wedin bound on the
    // pseudoinverse perturbation, valid while the perturbed matrix keeps
    // full rank
    const double pinv_enc = 1.0 / (be.alpha * sig_min);
    const double sigma_true_min = be.alpha * sig_min - be.eps;
    if (sigma_true_min > 0.0) {
      const double pinv_true = 1.0 / sigma_true_min;
      out.eps_perturbation =
          alpha_out * pol_err + kWedinConstant * pinv_enc * pinv_true * be.eps;
    } else {
      out.eps_perturbation = std::numeric_limits<double>::infinity();
    }

    transformed.alpha = alpha_out;
    transformed.eps = std::min(out.eps_rule, out.eps_perturbation);
    transformed.meta_anc_left = be.meta_anc_right + 1;
    transformed.meta_anc_right = be.meta_anc_left + 1;
    out.be = std::move(transformed);
    return out;
  }();
}

BlockEncoding invert_encode(const BlockEncoding& be, double kappa, double eps_pol) {
  return invert_encode_detailed(be, kappa, eps_pol).be;
}

std::pair<BlockEncoding, PipelineReport> riesz_encode(const BlockEncoding& h,
                                                      const contour::QuadratureRule& rule,
                                                      const contour::StripBound& bounds,
                                                      double eps_pol_pi) {
  if (!h.square()) throw IoError("riesz_encode", "requires a square encoding");
  const int m = rule.node_count;
  const double kappa = bounds.m_gamma * (h.alpha + bounds.b_gamma);
  const OddPolynomial poly = build_inverse_polynomial(kappa, eps_pol_pi);

  std::vector<std::pair<Complex, Matrix>> terms;
  terms.reserve(m);
  double alpha_pi = 0.0;
  for (int k = 0; k < m; ++k) {
    const Complex z = rule.nodes[k];
    BlockEncoding shifted = shift_encode(h, z);
    const double alpha_k = shifted.alpha;

    InverseEncoding node;
    try {
      node = [&] {
        InverseEncoding out;
        const Matrix sub = shifted.u.topLeftCorner(shifted.n_left, shifted.n_right);
        Eigen::JacobiSVD<Matrix> svd(sub);
        const auto& sig = svd.singularValues();
        if (sig(sig.size() - 1) < 1.0 / kappa - 1e-12) {
          throw RankError("riesz_encode",
                          "node resolvent conditioning exceeds the shared kappa bound");
        }
        BlockEncoding transformed = qsvt_apply_odd(shifted.adjoint(), poly);
        transformed.alpha = 8.0 * kappa / (3.0 * alpha_k);
        transformed.eps = transformed.alpha *
                          (poly.eps_pol + 4.0 * poly.degree * std::sqrt(h.eps / h.alpha));
        transformed.meta_anc_left = shifted.meta_anc_left + 1;
        transformed.meta_anc_right = shifted.meta_anc_right + 1;
        out.be = std::move(transformed);
        out.degree = poly.degree;
        return out;
      }();
    } catch (const Error& err) {
      throw RankError("riesz_encode", "node " + std::to_string(k) + ": " + err.reason());
    }

    const double c_k = 8.0 * kappa * std::abs(rule.weights[k]) / (3.0 * m * alpha_k);
    alpha_pi += c_k;
    const Complex phase = rule.weights[k] / std::abs(rule.weights[k]);
    terms.emplace_back(c_k * phase, node.be.u);
  }

  BlockEncoding pi = lcu_combine(terms);
  const Index logical = h.n_left;
  pi.n_left = logical;
  pi.n_right = logical;
  pi.anc_left = ceil_log2(pi.u.rows() / logical);
  pi.anc_right = pi.anc_left;
  pi.meta_anc_left = h.meta_anc_left + ceil_log2(m) + 2;
  pi.meta_anc_right = pi.meta_anc_left;
  pi.check_shape("riesz_encode");

  PipelineReport report;
  report.alpha_h = h.alpha;
  report.alpha_pi = alpha_pi;
  report.alpha_pi_bound =
      8.0 / 3.0 * bounds.m_gamma * bounds.d_gamma * (1.0 + bounds.b_gamma / h.alpha);
  report.eps_pi = alpha_pi * (poly.eps_pol + 4.0 * poly.degree * std::sqrt(h.eps / h.alpha));
  report.eps_trap = contour::trapezoid_error_bound(bounds, m);
  report.m_pi = poly.degree;
  report.query_count_h = poly.degree;
  report.emulation_solves = 2ll * poly.degree * m;
  report.node_count = m;
  report.kappa = kappa;
  report.eps_pol_pi = poly.eps_pol;
  report.eta = bounds.eta;
  report.chi = bounds.chi;
  report.m_gamma = bounds.m_gamma;
  report.ancilla_ledger.emplace_back("u_h", h.meta_anc_left);
  report.ancilla_ledger.emplace_back("riesz_projector", pi.meta_anc_left);

  pi.alpha = alpha_pi;
  pi.eps = report.eps_pi + report.eps_trap;
  return {std::move(pi), std::move(report)};
}

std::pair<BlockEncoding, BlockEncoding> column_blocks(const BlockEncoding& pi) {
  if (!pi.square()) throw IoError("column_blocks", "requires a square encoding");
  const Index logical = pi.n_right;
  if (logical % 2 != 0) throw IoError("column_blocks", "odd logical dimension");
  const Index half = logical / 2;
  const Index dim = pi.u.rows();

  BlockEncoding left = pi;
  left.n_right = half;
  left.anc_right = pi.anc_right + 1;
  left.meta_anc_right = pi.meta_anc_right + 1;
  left.check_shape("column_blocks");

  BlockEncoding right = pi;
  right.u = Matrix(dim, dim);
  for (Index g = 0; g < dim / logical; ++g) {
    right.u.middleCols(g * logical, half) = pi.u.middleCols(g * logical + half, half);
    right.u.middleCols(g * logical + half, half) = pi.u.middleCols(g * logical, half);
  }
  right.n_right = half;
  right.anc_right = pi.anc_right + 1;
  right.meta_anc_right = pi.meta_anc_right + 1;
  right.check_shape("column_blocks");
  return {std::move(left), std::move(right)};
}

BlockEncoding pseudoinverse_encode(const BlockEncoding& pi2, double kappa2,
                                   double eps_pol_plus) {
  const double slack = pi2.alpha > 0.0 ? pi2.eps / pi2.alpha : 0.0;
  return invert_encode_detailed(pi2, kappa2, eps_pol_plus, slack, "pseudoinverse_encode").be;
}

BlockEncoding product_encode(const BlockEncoding& be1, const BlockEncoding& be2) {
  if (be1.n_right != be2.n_left) throw IoError("product_encode", "dimension mismatch");
  BlockEncoding out =
      dilation_encode(Matrix(be1.block() * be2.block()), be1.alpha * be2.alpha);
  out.eps = be1.alpha * be2.eps + (be2.alpha + be2.eps) * be1.eps;
  out.meta_anc_left = be1.meta_anc_left + 1;
  out.meta_anc_right = be2.meta_anc_right + 1;
  return out;
}

double kappa2_from_solution(double alpha_pi, double xs_norm) {
  if (xs_norm < 0.0) throw IoError("kappa2_from_solution", "norm must be nonnegative");
  return alpha_pi * std::sqrt(1.0 + xs_norm * xs_norm);
}

std::pair<BlockEncoding, PipelineReport> care_solution_encode(
    const BlockEncoding& h, const contour::SmoothedSemicircle& c,
    const PipelineConfig& config) {
  if (!h.square()) throw IoError("care_solution_encode", "requires a square encoding");
  const Index two_n = h.n_left;
  if (two_n % 2 != 0) throw IoError("care_solution_encode", "logical dimension must be even");
  const Index n = two_n / 2;

  const Matrix h_tilde = extract_block(h);
  const auto split = spectral_split(h_tilde);
  if (split.has_imaginary) {
    throw SpectralError("care_solution_encode", "spectrum touches the imaginary axis");
  }

  const double eta = config.eta_fraction * contour::strip_width(c);
  const auto bounds =
      contour::resolvent_bounds(h_tilde, c, eta, config.samples, config.safety);

  // classical reference for the a-priori kappa_2 choice and diagnostics
  const Matrix pi_exact = riesz_projector_exact(h_tilde);
  const CareSolution classical = extract_solution_from_projector(pi_exact, n);
  const double xs_norm =
      config.xs_norm_hint >= 0.0 ? config.xs_norm_hint : spectral_norm(classical.x);

  // error budget: eps_h = 0 by construction; the projector path receives
  // projector_share of the target through the pseudoinverse amplification,
  // the pseudoinverse polynomial receives pseudo_share
  const double alpha_pi_bound =
      8.0 / 3.0 * bounds.m_gamma * bounds.d_gamma * (1.0 + bounds.b_gamma / h.alpha);
  const double kappa2_bound = kappa2_from_solution(alpha_pi_bound, xs_norm);
  const double amplification = 8.0 * kappa2_bound / (3.0 * alpha_pi_bound) +
                               kWedinConstant * kappa2_bound * kappa2_bound / alpha_pi_bound;
  const double eps_bar_target =
      config.projector_share * config.eps_x_target / amplification;
  const double eps_pol_pi = std::max(eps_bar_target / (2.0 * alpha_pi_bound), 1e-12);
  const double eps_trap_target = std::max(eps_bar_target / 2.0, 1e-13);

  int m = config.node_override > 0 ? config.node_override
                                   : std::max(4, contour::nodes_for_accuracy(bounds, eps_trap_target));
  const Index lcu_dim = (Index(1) << ceil_log2(m)) * 2 * two_n;  // per-node dim is 2 * 2n
  if (lcu_dim > config.max_dim) {
    throw EstimationError("care_solution_encode",
                          "node count " + std::to_string(m) +
                              " exceeds the emulation dimension cap");
  }
  const auto rule = contour::quadrature_nodes(c, m);

  auto [pi, report] = riesz_encode(h, rule, bounds, eps_pol_pi);
  report.eps_x_target = config.eps_x_target;
  report.xs_norm = xs_norm;

  auto [pi1, pi2] = column_blocks(pi);

  const double kappa2 = kappa2_from_solution(pi.alpha, xs_norm);
  const double eps_pol_plus = std::max(
      3.0 * config.pseudo_share * config.eps_x_target / (8.0 * kappa2), 1e-12);
  const double slack = pi2.eps / pi2.alpha;
  InverseEncoding pinv =
      invert_encode_detailed(pi2, kappa2, eps_pol_plus, slack, "pseudoinverse_encode");

  BlockEncoding neg_pi1 = pi1;
  neg_pi1.u = -pi1.u;

  BlockEncoding x = product_encode(pinv.be, neg_pi1);
  x.alpha = 8.0 * kappa2 / 3.0;  // alpha_plus * alpha_pi in exact arithmetic

  report.kappa2 = kappa2;
  report.eps_pol_plus = eps_pol_plus;
  report.m_plus = pinv.degree;
  report.eps_plus = pinv.be.eps;
  report.eps_plus_rule = pinv.eps_rule;
  report.eps_plus_perturbation = pinv.eps_perturbation;
  report.alpha_x = x.alpha;
  report.eps_x = x.eps;
  report.query_count_h = static_cast<long long>(report.m_pi) * (pinv.degree + 1);
  report.ancilla_ledger.emplace_back("pi2_pseudoinverse", pinv.be.meta_anc_left);
  report.ancilla_ledger.emplace_back("care_solution", x.meta_anc_left);

  const int expected = h.meta_anc_left + ceil_log2(m) + 5;
  if (x.meta_anc_left != expected) {
    throw IoError("care_solution_encode", "ancilla ledger mismatch");
  }

  if (config.compare_oracle) {
    report.pi_oracle_deviation = spectral_norm(Matrix(extract_block(pi) - pi_exact));
    report.x_oracle_deviation = spectral_norm(Matrix(extract_block(x) - classical.x));
  }
  return {std::move(x), std::move(report)};
}

}  // namespace qcare::blockenc

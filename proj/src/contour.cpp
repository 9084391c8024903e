#include "qcare/contour.hpp"

#include <cmath>
#include <string>

namespace qcare::contour {

namespace {
constexpr Complex kImag{0.0, 1.0};
}

void SmoothedSemicircle::validate() const {
  if (!(omega > 0.0) || !(radius > 0.0) || z0 < 0.0) {
    throw IoError("smoothed_semicircle", "requires omega > 0, R > 0, z0 >= 0");
  }
}

Complex semicircle_point(const SmoothedSemicircle& c, double theta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double root = std::sqrt(c.omega * c.omega + c.radius * c.radius * ct * ct);
  return Complex(c.z0 + 0.5 * (c.radius * ct + root), c.radius * st);
}

Complex semicircle_derivative(const SmoothedSemicircle& c, double theta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double root = std::sqrt(c.omega * c.omega + c.radius * c.radius * ct * ct);
  const double re = -0.5 * c.radius * st * (1.0 + c.radius * ct / root);
  return Complex(re, c.radius * ct);
}

Complex semicircle_point(const SmoothedSemicircle& c, Complex theta) {
  const Complex ct = std::cos(theta);
  const Complex st = std::sin(theta);
  const Complex root = std::sqrt(c.omega * c.omega + c.radius * c.radius * ct * ct);
  return c.z0 + 0.5 * (c.radius * ct + root) + kImag * c.radius * st;
}

Complex semicircle_derivative(const SmoothedSemicircle& c, Complex theta) {
  const Complex ct = std::cos(theta);
  const Complex st = std::sin(theta);
  const Complex root = std::sqrt(c.omega * c.omega + c.radius * c.radius * ct * ct);
  return -0.5 * c.radius * st * (1.0 + c.radius * ct / root) + kImag * c.radius * ct;
}

SmoothedSemicircle select_parameters(double alpha_h, double delta) {
  if (!(delta > 0.0)) {
    throw SpectralError("select_parameters", "spectral gap must be positive");
  }
  if (alpha_h < delta) {
    throw IoError("select_parameters", "norm bound alpha_h must be >= delta");
  }
  SmoothedSemicircle c;
  c.z0 = 0.0;
  c.omega = delta;
  c.radius = 2.0 * alpha_h;
  return c;
}

double strip_width(const SmoothedSemicircle& c) {
  c.validate();
  return std::asinh(c.omega / c.radius);
}

double admissible_eta(const SmoothedSemicircle& c) { return strip_width(c) / 16.0; }

QuadratureRule quadrature_nodes(const SmoothedSemicircle& c, int node_count) {
  c.validate();
  if (node_count < 1) {
    throw IoError("quadrature_nodes", "node count must be >= 1");
  }
  QuadratureRule rule;
  rule.node_count = node_count;
  rule.thetas.reserve(node_count);
  rule.nodes.reserve(node_count);
  rule.weights.reserve(node_count);
  for (int k = 0; k < node_count; ++k) {
    const double theta = 2.0 * M_PI * k / node_count;
    rule.thetas.push_back(theta);
    rule.nodes.push_back(semicircle_point(c, theta));
    rule.weights.push_back(semicircle_derivative(c, theta) / kImag);
  }
  return rule;
}

Matrix riesz_projector_quadrature(const Matrix& h, const QuadratureRule& rule) {
  const Index d = h.rows();
  const Matrix eye = Matrix::Identity(d, d);
  std::vector<Matrix> terms;
  terms.reserve(rule.node_count);
  for (int k = 0; k < rule.node_count; ++k) {
    Matrix shifted = rule.nodes[k] * eye - h;
    Eigen::PartialPivLU<Matrix> lu(shifted);
    if (!(lu.rcond() > 1e-14)) {
      throw SpectralError("riesz_projector_quadrature",
                          "near-singular shifted system at node " + std::to_string(k));
    }
    terms.push_back(rule.weights[k] * lu.solve(eye));
  }
  return pairwise_sum(terms) / static_cast<double>(rule.node_count);
}

StripBound resolvent_bounds(const Matrix& h, const SmoothedSemicircle& c, double eta,
                            int samples, double safety) {
  c.validate();
  if (samples < 8) {
    throw IoError("resolvent_bounds", "need at least 8 samples");
  }
  const double chi = strip_width(c);
  if (!(eta > 0.0) || eta >= chi) {
    throw IoError("resolvent_bounds", "eta must lie in (0, chi)");
  }
  const Index d = h.rows();
  const Matrix eye = Matrix::Identity(d, d);
  const double hnorm = spectral_norm(h);

  StripBound bound;
  bound.chi = chi;
  bound.eta = eta;
  bound.d_gamma = c.radius;
  bound.b_gamma = c.z0 + 0.5 * c.omega + c.radius;
  bound.safety = safety;
  bound.samples = samples;

  double m_gamma = 0.0;
  double g_plus = 0.0;
  double g_minus = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double theta = 2.0 * M_PI * j / samples;
    {
      const Complex z = semicircle_point(c, theta);
      const double smin = smallest_singular_value(Matrix(z * eye - h));
      m_gamma = std::max(m_gamma, 1.0 / smin);
    }
    for (const double sgn : {+1.0, -1.0}) {
      const Complex zt(theta, sgn * eta);
      const Complex z = semicircle_point(c, zt);
      const double w = std::abs(semicircle_derivative(c, zt));
      const double smin = smallest_singular_value(Matrix(z * eye - h));
      if (smin <= 1e-13 * std::max(1.0, hnorm)) {
        throw SpectralError("resolvent_bounds",
                            "shifted contour touches the spectrum; eta too large");
      }
      if (sgn > 0.0) {
        g_plus = std::max(g_plus, w / smin);
      } else {
        g_minus = std::max(g_minus, w / smin);
      }
    }
  }
  bound.m_gamma = safety * m_gamma;
  bound.gamma_plus = safety * g_plus;
  bound.gamma_minus = safety * g_minus;
  return bound;
}

int nodes_for_accuracy(const StripBound& bound, double eps_trap) {
  if (!(eps_trap > 0.0)) {
    throw IoError("nodes_for_accuracy", "eps_trap must be positive");
  }
  const double m_minus = std::log(2.0 * bound.gamma_minus / eps_trap + 1.0) / bound.eta;
  const double m_plus = std::log(2.0 * bound.gamma_plus / eps_trap + 1.0) / bound.eta;
  return static_cast<int>(std::ceil(std::max(m_minus, m_plus)));
}

double trapezoid_error_bound(const StripBound& bound, int node_count) {
  const double denom = std::expm1(bound.eta * node_count);
  return bound.gamma_minus / denom + bound.gamma_plus / denom;
}

std::vector<ConvergencePoint> convergence_study(const Matrix& h, const SmoothedSemicircle& c,
                                                const StripBound& bound,
                                                const std::vector<int>& node_counts,
                                                const Matrix& reference) {
  std::vector<ConvergencePoint> out;
  out.reserve(node_counts.size());
  for (const int m : node_counts) {
    const QuadratureRule rule = quadrature_nodes(c, m);
    const Matrix approx = riesz_projector_quadrature(h, rule);
    ConvergencePoint point;
    point.node_count = m;
    point.eps_measured = spectral_norm(Matrix(approx - reference));
    point.eps_bound = trapezoid_error_bound(bound, m);
    out.push_back(point);
  }
  return out;
}

double fit_decay_slope(const std::vector<ConvergencePoint>& points, double floor) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (const auto& p : points) {
    if (p.eps_measured <= floor) continue;
    const double x = p.node_count;
    const double y = std::log(p.eps_measured);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) {
    throw IoError("fit_decay_slope", "fewer than two points above the floor");
  }
  const double denom = count * sxx - sx * sx;
  return (count * sxy - sx * sy) / denom;
}

}  // namespace qcare::contour

#pragma once

#include <vector>

#include "qcare/errors.hpp"
#include "qcare/linalg.hpp"

namespace qcare::contour {

// Smoothed semicircle
//
//   gamma(t) = z0 + (R cos t + sqrt(omega^2 + R^2 cos^2 t))/2 + i R sin t,
//
// a 2*pi-periodic C-infinity curve enclosing the right-half-plane spectrum.
// The square-root branch points limit the analyticity strip to
// |Im t| < chi = arsinh(omega/R), and |gamma'(t)| <= R on the real axis.
struct SmoothedSemicircle {
  double z0 = 0.0;
  double radius = 1.0;  // R
  double omega = 1.0;

  void validate() const;
};

Complex semicircle_point(const SmoothedSemicircle& c, double theta);
Complex semicircle_derivative(const SmoothedSemicircle& c, double theta);

// Holomorphic extension to complex angle (principal square root).
Complex semicircle_point(const SmoothedSemicircle& c, Complex theta);
Complex semicircle_derivative(const SmoothedSemicircle& c, Complex theta);

// Standard parameter choice z0 = 0, omega = delta, R = 2 * alpha_h for a
// matrix with norm bound alpha_h and spectral gap delta.
SmoothedSemicircle select_parameters(double alpha_h, double delta);

// Maximal analyticity strip half-width chi = arsinh(omega/R).
double strip_width(const SmoothedSemicircle& c);

// Conservative working width chi/16; with the standard parameters the
// shifted contours are guaranteed to stay a distance >= delta/4 from the
// spectrum.
double admissible_eta(const SmoothedSemicircle& c);

struct QuadratureRule {
  int node_count = 0;
  std::vector<double> thetas;    // 2*pi*k/M
  std::vector<Complex> nodes;    // gamma(theta_k)
  std::vector<Complex> weights;  // gamma'(theta_k)/i
};

QuadratureRule quadrature_nodes(const SmoothedSemicircle& c, int node_count);

// Trapezoid approximation (1/M) sum_k w_k (z_k I - H)^{-1}, one LU solve per
// node, accumulated by a deterministic pairwise tree reduction.
Matrix riesz_projector_quadrature(const Matrix& h, const QuadratureRule& rule);

// Sampled contour bounds. gamma_plus/minus include the |gamma'| factor on
// the two eta-shifted contours; m_gamma is the on-contour resolvent norm
// maximum; d_gamma = R and b_gamma = z0 + omega/2 + R are the proven
// derivative and magnitude bounds.
struct StripBound {
  double chi = 0.0;
  double eta = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  double m_gamma = 0.0;
  double d_gamma = 0.0;
  double b_gamma = 0.0;
  double safety = 1.25;
  int samples = 0;
};

StripBound resolvent_bounds(const Matrix& h, const SmoothedSemicircle& c, double eta,
                            int samples = 64, double safety = 1.25);

// A-priori node count: M = ceil(max_pm log(2 gamma_pm / eps + 1) / eta).
int nodes_for_accuracy(const StripBound& bound, double eps_trap);

// A-priori error bound gamma_-/(e^{eta M}-1) + gamma_+/(e^{eta M}-1).
double trapezoid_error_bound(const StripBound& bound, int node_count);

struct ConvergencePoint {
  int node_count = 0;
  double eps_measured = 0.0;
  double eps_bound = 0.0;
};

struct QuadratureErrorReport {
  double eps_trap_bound = 0.0;
  double eps_trap_measured = 0.0;
  double slope = 0.0;  // fitted decay rate of log error vs M
};

// Sweeps the rule size and measures error against a reference projector.
std::vector<ConvergencePoint> convergence_study(const Matrix& h, const SmoothedSemicircle& c,
                                                const StripBound& bound,
                                                const std::vector<int>& node_counts,
                                                const Matrix& reference);

// Least-squares slope of log(error) vs M restricted to points above the
// numerical floor (default 100x double epsilon).
double fit_decay_slope(const std::vector<ConvergencePoint>& points, double floor = 2.2e-14);

}  // namespace qcare::contour

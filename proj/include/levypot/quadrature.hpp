#pragma once

#include "levypot/core.hpp"

#include <functional>
#include <vector>

namespace levypot::quad {

/// Globally adaptive Gauss-Kronrod (31-point) on [a, b]; b may be +inf. Stops
/// when the error estimate is below max(abs_tol, rel_tol |I|) or after 2000 panels.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10,
                 double* error_estimate = nullptr, double abs_tol = 1e-300);

/// Double-exponential rule; tolerant of integrable endpoint singularities.
double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol = 1e-10);

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Cubature on S^{d-1}: weights sum to the sphere area. n controls the angular
/// resolution (points per polar angle); d = 1 gives the two directions +-1.
struct SphereRule {
  std::vector<Point> directions;
  std::vector<double> weights;
};
SphereRule sphere_rule(int d, int n);

/// Average of f over the sphere |x - c| = r.
double sphere_average(const std::function<double(const Point&)>& f, const Point& c, double r, int n = 32);

/// Tensor Gauss-Legendre rule over the box [lo, hi].
struct Cubature {
  std::vector<Point> nodes;
  std::vector<double> weights;
};
Cubature box_rule(const Point& lo, const Point& hi, int n_per_dim);

/// Polar Gauss rule over the ball B(c, r): radial Gauss in r^d-mass times sphere rule.
Cubature ball_rule(const Point& c, double r, int n_radial, int n_angular);

}  // namespace levypot::quad

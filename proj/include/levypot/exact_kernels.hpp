#pragma once

#include "levypot/core.hpp"

namespace levypot {

// Closed-form kernels for the isotropic operator with symbol |xi|^{2s}.
// s = 1 denotes Brownian motion with generator (1/2) Delta, so the s = 1
// Green functions are twice the classical Newtonian ones. Balls are centred
// at the origin.

/// Riesz constant A(d, s) with (-Delta)^{-s} = A |x - y|^{2s-d}; doubled at s = 1.
double riesz_constant(int d, double s);

/// Free-space Green function A(d, s) |x - y|^{2s-d}; +inf on the diagonal.
/// Throws UnsupportedError when d <= 2s (recurrent regime).
double riesz_green_free(int d, double s, const Point& x, const Point& y);

/// Green function of the ball B(0, radius) killed on exit.
double green_ball(int d, double s, double radius, const Point& x, const Point& y);

/// Inner integral int_0^{r0} t^{s-1} (1 + t)^{-d/2} dt of the ball Green function.
double green_ball_inner(int d, double s, double r0);

/// Exit density of the isotropic 2s-stable process from B(0, radius) started at x, at z outside.
double poisson_ball(int d, double s, double radius, const Point& x, const Point& z);

/// Density of |X_tau| at radius + gap, gap > 0, for x inside B(0, radius). Taking the
/// gap rather than the radius keeps the boundary singularity resolvable.
double poisson_ball_radial_density(int d, double s, double radius, const Point& x, double gap);

/// Distribution function of |X_tau| - radius on (0, gap].
double poisson_ball_radial_cdf(int d, double s, double radius, const Point& x, double gap);

/// P(exit at b) for one-dimensional Brownian motion on (a, b).
double newtonian_exit_interval(double x, double a, double b);

/// E tau of (a, b) for Brownian motion with generator (1/2) sigma2 d^2/dx^2.
double brownian_exit_time_interval(double x, double a, double b, double sigma2 = 1.0);

/// E tau of B(0, radius). For s = 1 the generator is (1/2) sigma2 Delta; sigma2 is ignored otherwise.
double expected_exit_time_ball(int d, double s, double radius, const Point& x, double sigma2 = 1.0);

/// Probability that the process started at x ever hits the closed ball B(0, eps), d > 2s.
double ball_hitting_probability(int d, double s, double eps, const Point& x);

/// Profile of a Bocher atom at x0: the free Green function G(x, x0).
inline double bocher_atom_profile(int d, double s, const Point& x, const Point& x0) {
  return riesz_green_free(d, s, x, x0);
}

}  // namespace levypot

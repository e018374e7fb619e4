#include "levypot/exact_kernels.hpp"

#include "levypot/quadrature.hpp"

#include <boost/math/special_functions/beta.hpp>

namespace levypot {

namespace {

void check_transient(int d, double s) {
  require_dim(d);
  if (!(s > 0.0 && s <= 1.0)) throw ArgumentError("s must lie in (0, 1]");
  if (d <= 2.0 * s) throw UnsupportedError("Green function requires d > 2s");
}

double generator_factor(double s) { return s == 1.0 ? 2.0 : 1.0; }

}  // namespace

double riesz_constant(int d, double s) {
  check_transient(d, s);
  const double alpha = 2.0 * s;
  return generator_factor(s) * std::tgamma(0.5 * (d - alpha)) /
         (std::pow(2.0, alpha) * std::pow(kPi, 0.5 * d) * std::tgamma(s));
}

double riesz_green_free(int d, double s, const Point& x, const Point& y) {
  const double A = riesz_constant(d, s);
  const double r = (x - y).norm();
  if (r == 0.0) return kInf;
  return A * std::pow(r, 2.0 * s - d);
}

double green_ball_inner(int d, double s, double r0) {
  if (r0 <= 0.0) return 0.0;
  const double b = 0.5 * d - s;
  if (b > 0.0) {
    if (std::isinf(r0)) return boost::math::beta(s, b);
    return boost::math::beta(s, b, r0 / (1.0 + r0));
  }
  if (std::isinf(r0)) return kInf;
  // t = v^{1/s} removes the endpoint singularity.
  auto f = [&](double v) { return std::pow(1.0 + std::pow(v, 1.0 / s), -0.5 * d) / s; };
  return quad::integrate(f, 0.0, std::pow(r0, s), 1e-12);
}

double green_ball(int d, double s, double radius, const Point& x, const Point& y) {
  require_dim(d);
  if (!(s > 0.0 && s <= 1.0)) throw ArgumentError("s must lie in (0, 1]");
  const double R2 = radius * radius;
  const double ax = R2 - x.squaredNorm(), ay = R2 - y.squaredNorm();
  if (!(ax > 0.0) || !(ay > 0.0)) throw DomainError("green_ball: points must lie in the open ball");
  double r2 = (x - y).squaredNorm();
  if (r2 == 0.0) {
    if (d >= 2.0 * s) return kInf;
    r2 = 1e-24 * R2;  // finite diagonal limit
  }
  const double alpha = 2.0 * s;
  const double kappa = generator_factor(s) * std::tgamma(0.5 * d) /
                       (std::pow(2.0, alpha) * std::pow(kPi, 0.5 * d) * std::pow(std::tgamma(s), 2));
  const double r0 = ax * ay / (R2 * r2);
  return kappa * std::pow(r2, 0.5 * (alpha - d)) * green_ball_inner(d, s, r0);
}

double poisson_ball(int d, double s, double radius, const Point& x, const Point& z) {
  require_dim(d);
  if (!(s > 0.0 && s < 1.0)) throw ArgumentError("poisson_ball: s must lie in (0, 1)");
  const double R2 = radius * radius;
  const double ax = R2 - x.squaredNorm(), az = z.squaredNorm() - R2;
  if (!(ax > 0.0) || !(az > 0.0)) throw DomainError("poisson_ball: need |x| < radius < |z|");
  const double c = std::tgamma(0.5 * d) * std::pow(kPi, -0.5 * d - 1.0) * std::sin(kPi * s);
  return c * std::pow(ax / az, s) * std::pow((x - z).norm(), -d);
}

double poisson_ball_radial_density(int d, double s, double radius, const Point& x, double gap) {
  if (!(gap > 0.0)) return 0.0;
  if (std::isinf(gap)) return 0.0;
  const double A = x.norm();
  const double rho = radius + gap;
  const double R2 = radius * radius;
  const double shell = gap * (2.0 * radius + gap);  // rho^2 - R^2 without cancellation
  const double c = std::tgamma(0.5 * d) * std::pow(kPi, -0.5 * d - 1.0) * std::sin(kPi * s);
  const double scale = c * std::pow((R2 - A * A) / shell, s);
  if (d == 2) {
    // Mean of |x - rho w|^{-2} over the circle is 1 / (rho^2 - |x|^2).
    return 2.0 * kPi * rho * scale / (rho * rho - A * A);
  }
  auto f = [&](const Point& z) { return std::pow((x - z).norm(), -d); };
  return unit_sphere_area(d) * std::pow(rho, d - 1) * scale * quad::sphere_average(f, zero_point(d), rho, 64);
}

double poisson_ball_radial_cdf(int d, double s, double radius, const Point& x, double gap) {
  if (!(gap > 0.0)) return 0.0;
  if (std::isinf(gap)) return 1.0;
  auto f = [&](double g) { return poisson_ball_radial_density(d, s, radius, x, g); };
  // g = v^{1/(1-s)} absorbs the (rho - radius)^{-s} singularity.
  const double e = 1.0 / (1.0 - s);
  auto head = [&](double v) { return v <= 0.0 ? 0.0 : f(std::pow(v, e)) * e * std::pow(v, e - 1.0); };
  const double split = std::min(gap, radius);
  double acc = quad::integrate(head, 0.0, std::pow(split, 1.0 - s), 1e-12);
  if (gap > split) {
    // g = w^{-1/(2s)} flattens the heavy tail.
    const double k = 1.0 / (2.0 * s);
    auto tail = [&](double w) { return w <= 0.0 ? 0.0 : f(std::pow(w, -k)) * k * std::pow(w, -1.0 - k); };
    acc += quad::integrate(tail, std::pow(gap, -2.0 * s), std::pow(split, -2.0 * s), 1e-12);
  }
  return acc;
}

double newtonian_exit_interval(double x, double a, double b) {
  if (!(a < x && x < b)) throw DomainError("newtonian_exit_interval: need a < x < b");
  return (x - a) / (b - a);
}

double brownian_exit_time_interval(double x, double a, double b, double sigma2) {
  if (!(a < x && x < b)) throw DomainError("brownian_exit_time_interval: need a < x < b");
  return (x - a) * (b - x) / sigma2;
}

double expected_exit_time_ball(int d, double s, double radius, const Point& x, double sigma2) {
  require_dim(d);
  const double h = radius * radius - x.squaredNorm();
  if (!(h > 0.0)) throw DomainError("expected_exit_time_ball: x must lie in the open ball");
  if (s == 1.0) return h / (d * sigma2);
  const double alpha = 2.0 * s;
  return std::tgamma(0.5 * d) / (std::pow(2.0, alpha) * std::tgamma(1.0 + s) * std::tgamma(0.5 * d + s)) *
         std::pow(h, s);
}

double ball_hitting_probability(int d, double s, double eps, const Point& x) {
  check_transient(d, s);
  const double r2 = x.squaredNorm();
  if (r2 <= eps * eps) return 1.0;
  return boost::math::ibeta(0.5 * d - s, s, eps * eps / r2);
}

}  // namespace levypot

#pragma once

#include "levypot/core.hpp"
#include "levypot/rng.hpp"

namespace levypot {

/// Symmetric alpha-stable variate with E exp(i xi X) = exp(-|xi|^alpha),
/// alpha in (0, 2], by Chambers-Mallows-Stuck.
inline double sample_symmetric_stable(double alpha, Rng& rng) {
  const double v = kPi * (rng.uniform() - 0.5);
  if (alpha == 2.0) return std::sqrt(2.0) * rng.normal();
  if (alpha == 1.0) return std::tan(v);
  const double w = rng.exponential();
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

/// Positive beta-stable variate with Laplace transform E exp(-lambda A) = exp(-lambda^beta),
/// beta in (0, 1), by Kanter's representation.
inline double sample_positive_stable(double beta, Rng& rng) {
  const double u = kPi * rng.uniform();
  const double w = rng.exponential();
  const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
  return a * std::pow(std::sin((1.0 - beta) * u) / w, (1.0 - beta) / beta);
}

/// Rotationally invariant alpha-stable vector with E exp(i xi.X) = exp(-|xi|^alpha):
/// subordinated Gaussian sqrt(A) N(0, 2I), A positive (alpha/2)-stable.
inline void sample_isotropic_stable(double alpha, Rng& rng, Point& out) {
  const double scale = std::sqrt(2.0 * sample_positive_stable(0.5 * alpha, rng));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = scale * rng.normal();
}

/// Uniform direction on S^{d-1}.
inline void sample_direction(Rng& rng, Point& out) {
  const auto d = out.size();
  if (d == 1) {
    out[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return;
  }
  double n2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) out[i] = rng.normal();
    n2 = out.squaredNorm();
  } while (n2 < 1e-300);
  out /= std::sqrt(n2);
}

}  // namespace levypot

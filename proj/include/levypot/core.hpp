#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace levypot {

inline constexpr int kMaxDim = 8;

// Small fixed-capacity vectors/matrices: no heap traffic on the path-stepping hot loop.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = std::numbers::pi;

// Error taxonomy. Every failure the library reports is one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Argument outside the allowed set (x0 not in V, point outside ball, ...).
struct DomainError : Error {
  using Error::Error;
};
/// Malformed numeric argument (dt <= 0, n_max < 0, too few ladder rungs, ...).
struct ArgumentError : Error {
  using Error::Error;
};
/// Missing or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};
/// Valid request the implementation has no method for.
struct UnsupportedError : Error {
  using Error::Error;
};
/// Nested Monte Carlo budget exceeds the configured cap.
struct BudgetError : Error {
  using Error::Error;
};
/// Evaluation grid is incompatible with the singular set or the domain.
struct GridError : Error {
  using Error::Error;
};

inline Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

inline Point zero_point(int d) { return Point::Zero(d); }

inline void require_dim(int d) {
  if (d < 1 || d > kMaxDim) throw ArgumentError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
}

/// Surface area of the unit sphere S^{d-1}.
inline double unit_sphere_area(int d) {
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) { return unit_sphere_area(d) / d; }

}  // namespace levypot

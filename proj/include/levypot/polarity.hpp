#pragma once

#include "levypot/potential_mc.hpp"

#include <string>
#include <vector>

namespace levypot {

enum class Verdict { Polar, Nonpolar, Inconclusive };
std::string to_string(Verdict v);

struct LadderEntry {
  double eps = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
};

struct PolarityVerdict {
  Verdict verdict = Verdict::Inconclusive;
  /// Slope of log p against log eps.
  double fitted_exponent = 0.0;
  double exponent_std_error = 0.0;
  /// p0 in the fit p(eps) = p0 + c eps^g (g profiled over a grid).
  double limit = 0.0;
  double limit_std_error = 0.0;
  std::vector<LadderEntry> evidence;
  std::string note;
};

/// Ball B_eps(center) or the tube {|Pi(y - center)| < eps}, Pi keeping the first codim coordinates.
struct Target {
  enum class Kind { Ball, Tube };
  Kind kind = Kind::Ball;
  Point center;
  double eps = 0.1;
  int codim = 0;

  static Target ball(const Point& c, double eps) { return {Kind::Ball, c, eps, 0}; }
  static Target tube(const Point& c, int codim, double eps) { return {Kind::Tube, c, eps, codim}; }
  double distance(const Point& x) const;
};

struct HittingOptions {
  /// Radius of the reference ball about the target centre; 0 selects 10 dist(x, target).
  double reference_radius = 0.0;
  double kappa = 0.0;
  std::string tag = "hitting";
};

/// E[e^{-kappa sigma}; sigma < exit from the reference ball, sigma < horizon], sigma the hitting time of the target.
MCEstimate hitting_probability(const Process& p, const Target& target, const Point& x, std::int64_t n,
                               const PathConfig& cfg, const HittingOptions& opts = {});

/// Geometric ladder eps0, eps0/2, ... with eps0 = dist(x, center)/8.
std::vector<double> default_eps_ladder(const Point& x, const Point& center, int rungs = 5);

std::vector<LadderEntry> hitting_ladder(const Process& p, const Target& target, const Point& x,
                                        const std::vector<double>& eps, std::int64_t n, const PathConfig& cfg,
                                        const HittingOptions& opts = {});

/// Verdict from a ladder of at least four rungs: nonpolar when the fitted limit
/// exceeds the detection floor 10/n by two standard errors, polar when the
/// estimates decrease along the ladder with a log-log exponent significantly
/// above zero (or all estimates are zero), inconclusive otherwise.
PolarityVerdict polar_extrapolate(const std::vector<LadderEntry>& evidence);

struct LilResult {
  bool polar = false;
  /// Criterion that decided: "lil" (nonempty window) or "fourier" (one-dimensional fallback).
  std::string criterion;
  double beta = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool window_nonempty = false;
  /// Window built from the alternative cylindrical index min s_i.
  double paper_beta = 0.0;
  bool paper_window_nonempty = false;
};

/// Singleton polarity from the LIL window (beta v 1, d); when d = 1 the window is
/// empty and the Fourier criterion (points polar iff int 1/(1 + psi) = inf) decides.
LilResult lil_singleton_test(const JumpSpec& jump, int d);

/// Whether points are polar for the process with symbol psi restricted to the first k
/// coordinates: int_{R^k} 1/(1 + psi) dxi = inf. Uses the growth exponents of psi.
bool fourier_points_polar(const JumpSpec& jump, bool gaussian_part, int k);

struct HyperplaneOptions {
  /// Paths per rung of the MC tube ladder; 0 skips the ladder.
  std::int64_t n = 0;
  PathConfig cfg;
  Point x;  // start point; empty selects (0.5, 0, ..., 0)
  double reference_radius = 1.0;
};

/// Polarity of {Pi(x) = 0}, Pi keeping the first codim coordinates, for codim >= 2.
PolarityVerdict hyperplane_polarity(const LevyTriplet& triplet, int d, int codim, const HyperplaneOptions& opts = {});

/// Certified lower bound on the kappa-capacity of B_eps: mass / sup Gmu for the uniform
/// trial measure of the given mass, G the free Riesz kernel (which dominates G^kappa).
double capacity_estimate(const JumpSpec& jump, int d, double eps, double kappa, double mass = 1.0);

}  // namespace levypot

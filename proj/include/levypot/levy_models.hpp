#pragma once

#include "levypot/core.hpp"
#include "levypot/domain.hpp"
#include "levypot/drift.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace levypot {

// ---------------------------------------------------------------------------
// Jump specifications. Every stable variant is normalized so that its
// symbol is exactly |xi|^{2s} (per axis for the cylindrical case).

struct NoJump {};

struct IsotropicStable {
  double s = 0.5;
};

/// Independent one-dimensional stable noises along the coordinate axes;
/// the Levy measure lives on the axes.
struct CylindricalStable {
  std::vector<double> s;
};

/// Laplacian plus isotropic stable part, Delta + Delta^s. The jump measure
/// is the isotropic one; the Laplacian enters through Q = 2I (see mixed_laplacian_stable).
struct MixedLaplacianStable {
  double s = 0.5;
};

using JumpSpec = std::variant<NoJump, IsotropicStable, CylindricalStable, MixedLaplacianStable>;

bool has_jumps(const JumpSpec& j);
std::string jump_name(const JumpSpec& j);
void validate_jump(const JumpSpec& j, int d);

/// Levy triplet (l, Q, nu) with killing constant fixed at 0.
struct LevyTriplet {
  Point l;
  Matrix Q;
  JumpSpec jump = NoJump{};
  double c = 0.0;

  int dim() const { return static_cast<int>(l.size()); }
};

/// Throws ConfigError unless Q is symmetric PSD (eigenvalues >= -1e-12), c = 0, d >= 1.
void validate_triplet(const LevyTriplet& t);

LevyTriplet brownian(int d, double variance = 1.0);
LevyTriplet isotropic_stable(int d, double s);
LevyTriplet cylindrical_stable(const std::vector<double>& s);
LevyTriplet mixed_laplacian_stable(int d, double s);

/// c(d,s) with nu(dz) = c(d,s)|z|^{-d-2s} dz giving symbol |xi|^{2s}.
double stable_levy_constant(int d, double s);

// ---------------------------------------------------------------------------

/// psi(xi) = -i l.xi + xi^T Q xi / 2 + int (1 - e^{i y.xi} + i y.xi 1_{|y|<1}) nu(dy).
std::complex<double> symbol_eval(const LevyTriplet& triplet, const Point& xi);

/// Grid used to approximate the supremum of |div b|.
struct Kappa0Options {
  std::vector<Point> grid;           // evaluation points; empty means none supplied
  bool allow_finite_differences = false;
};

/// kappa_0 = sup |div b| over the grid. Uses the analytic divergence when
/// present, finite differences only when explicitly allowed.
double kappa0(const DriftField& drift, const Kappa0Options& opts);

/// Default grid: n Halton points in the domain.
std::vector<Point> default_kappa0_grid(const Domain& D, int n = 10000);

/// Blumenthal-Getoor index of the jump part, analytic value per variant.
double bg_index(const JumpSpec& jump, int d);

struct BgScan {
  double threshold = 0.0;  // midpoint between last divergent and first convergent alpha
  double resolution = 0.01;
  std::vector<std::pair<double, bool>> table;  // (alpha, converges)
};

/// Numerical integrability scan of int_{B_1} |x|^alpha nu(dx) on an alpha grid.
BgScan bg_scan(const JumpSpec& jump, int d, double resolution = 0.01);

struct HormanderResult {
  int rank_achieved = 0;
  int n_used = 0;
  bool satisfied = false;
};

/// Stacks [sqrt(Q), B_1 sqrt(Q), ..., B_n sqrt(Q), C, B_1 C, ..., B_n C] for
/// n = 0..n_max and returns the first n reaching rank d (relative singular
/// value tolerance 1e-8). Uses Taylor jets when the drift supplies them.
HormanderResult hormander_rank_check(const DriftField& drift, const Matrix& Q, const Matrix& C, const Point& x,
                                     int n_max);

/// The matrix B_n(x) of the recursion, exposed for tests.
Matrix hormander_matrix(const DriftField& drift, const Matrix& Q, const Point& x, int n);

/// Compact set F used by the tail weight: closed ball (radius may be 0 for a point).
struct CompactBall {
  Point center;
  double radius = 0.0;
};

enum class QuadratureScheme { SphericalShells, AxialPolar };

/// rho_F(x) = nu(B^c_{r_F} cap (F - x)) + nu(B^c_{r_F} cap (x - F)),
/// r_F = min(2 dist(F, V^c), 1).
double tail_weight_rho(const CompactBall& F, const Domain& V, const Point& x, const JumpSpec& jump,
                       QuadratureScheme scheme = QuadratureScheme::SphericalShells);

// ---------------------------------------------------------------------------
// Jump-measure integrals used by the Ikeda-Watanabe estimators.

/// nu_y(D^c) = nu({z : y + z not in D}) for y in D.
double exterior_jump_mass(const JumpSpec& jump, const Domain& D, const Point& y);

/// int_{D^c} u(z) nu(z - y) dz for y in D, by ray quadrature in w = rho^{-2s}.
double exterior_jump_integral(const JumpSpec& jump, const Domain& D, const Point& y,
                              const std::function<double(const Point&)>& u, int angular = 64, int radial = 24);

/// Fraction of the sphere |z| = rho lying in the ball B(a, r) (d >= 1).
double sphere_fraction_in_ball(int d, double rho, double a_norm, double r);

}  // namespace levypot

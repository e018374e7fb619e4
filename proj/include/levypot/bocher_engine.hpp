#pragma once

#include "levypot/potential_mc.hpp"

#include <optional>
#include <vector>

namespace levypot {

/// A nonnegative solution u of -Au + b.grad u + lambda = mu0 + sigma_K on D.
struct ProblemSpec {
  Process process;
  ScalarField u;
  Domain D;
  Domain V;
  std::vector<Point> K;
  SignedMeasure lambda;
  /// Absent means unknown; decompose may then fit a coarse nonnegative hat-function density.
  std::optional<MeasureSpec> mu0;
  /// Known sigma_K, used only by representation_check_kappa1.
  MeasureSpec sigma;
  double kappa1 = 0.0;
  /// Evaluation points in V \ K; empty selects a Halton grid.
  std::vector<Point> grid;
  int grid_size = 20;
  /// Minimal admissible distance from grid points to K, in units of grid_cell.
  double grid_cell = 0.05;
  /// Hat functions per dimension for the unknown-mu0 fit; 0 disables it.
  int mu0_hats_per_dim = 0;
};

/// Checks u >= 0 on sample points, V compactly inside D and K inside V.
void validate_problem(const ProblemSpec& spec);

/// Grid points actually used: spec.grid, or Halton points of V at least
/// two cells from K and one cell from the boundary. Throws GridError when a
/// supplied point is too close to K or outside V.
std::vector<Point> decomposition_grid(const ProblemSpec& spec);

struct AtomCoefficient {
  Point x;
  double a = 0.0;
  double std_error = 0.0;
  /// Unconstrained least-squares value; negative beyond 3 sigma flags an inconsistency.
  double unconstrained = 0.0;
};

struct BocherDecomposition {
  std::vector<Point> grid_points;
  std::vector<double> u_values;
  std::vector<MCEstimate> h_values;
  std::vector<AtomCoefficient> atom_coeffs;
  std::vector<double> density_coeffs;
  std::vector<double> mu0_potential;
  std::vector<double> sigma_potential;
  std::vector<double> lambda_potential;  // R lambda^+ - R lambda^-
  double residual_rms = 0.0;
  /// RMS of the per-point standard errors of the fitted target.
  double residual_floor = 0.0;
  /// RMS of u over the grid.
  double central_scale = 0.0;
  bool inconsistent = false;
};

struct NnlsResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

/// min |X a - y|^2 subject to a >= 0 by projected gradient (at most 1000
/// iterations, stop when the relative step falls below 1e-10).
NnlsResult nnls_projected_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// u = h_V + R mu0 + R lambda^- - R lambda^+ + sum_k a_k G_V(., x_k) fitted on the grid.
BocherDecomposition decompose(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg);

struct RepresentationCheck {
  std::vector<Point> grid_points;
  std::vector<MCEstimate> lhs;
  std::vector<MCEstimate> rhs;
  double max_z_score = 0.0;
};

/// u = E^{k1} u(X_tau) + R^{k1}(mu0 + sigma - lambda) + k1 R^{k1} u at each grid point.
RepresentationCheck representation_check_kappa1(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg);

struct MaxPrincipleCheck {
  std::vector<Point> grid_points;
  std::vector<MCEstimate> margins;
  double min_margin = 0.0;
  /// Smallest margin / std_error (+inf when every margin is exact and nonnegative).
  double min_margin_z = 0.0;
  /// Sample infimum of u over D \ V; an upper bound of the true infimum.
  double inf_exterior = 0.0;
  std::int64_t exterior_samples = 0;
};

/// margin(x) = u(x) + R lambda^+(x) - inf_{D\V} u * w_V(x).
MaxPrincipleCheck verify_max_principle(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg,
                                       int exterior_samples = 10000);

/// Sample of D \ V: Halton points plus a shell next to dV and dD.
std::vector<Point> exterior_sample(const Domain& D, const Domain& V, int n);

/// Limit a of sphere-averaged u / g as r -> 0, fitted as q(r) = a + c / g(r)
/// over a strictly decreasing ladder of at least four radii. g is the radial
/// profile of the kernel at x0.
double singularity_strength(const ScalarField& u, const Point& x0, const std::function<double(double)>& g,
                            const std::vector<double>& radii);

/// Same with the free Riesz profile of the (d, s) stable or Brownian (s = 1) kernel.
double singularity_strength(const ScalarField& u, const Point& x0, int d, double s, const std::vector<double>& radii);

}  // namespace levypot

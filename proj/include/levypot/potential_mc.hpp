#pragma once

#include "levypot/path_sim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace levypot {

using ScalarField = std::function<double(const Point&)>;

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  double censored_fraction = 0.0;
  /// Set when censoring exceeds the 1e-3 validation threshold.
  bool flagged = false;

  static MCEstimate exact(double v, std::int64_t n = 0) { return {v, 0.0, n, 0.0, false}; }
};

inline constexpr double kCensoringThreshold = 1e-3;

/// a + c b with independent errors combined in quadrature.
MCEstimate combine(const MCEstimate& a, const MCEstimate& b, double c = 1.0);
MCEstimate scaled(const MCEstimate& a, double c);
/// |a - b| / sqrt(se_a^2 + se_b^2); 0 when both are exact and equal.
double z_score(const MCEstimate& a, const MCEstimate& b);

struct Atom {
  Point x;
  double mass = 0.0;
};

/// Positive measure: optional Lebesgue density plus point masses.
struct MeasureSpec {
  ScalarField density;
  std::vector<Atom> atoms;

  bool empty() const { return !density && atoms.empty(); }
  static MeasureSpec zero() { return {}; }
  static MeasureSpec lebesgue(double c = 1.0) {
    return {[c](const Point&) { return c; }, {}};
  }
  static MeasureSpec from_density(ScalarField f) { return {std::move(f), {}}; }
};

/// Signed measure lambda = lambda_plus - lambda_minus.
struct SignedMeasure {
  MeasureSpec plus;
  MeasureSpec minus;
};

/// Stream key for (estimator tag, evaluation point, extra parameters).
StreamKey estimator_key(std::uint64_t seed, std::string_view tag, const Point& x, std::uint64_t extra = 0);

struct ResolventOptions {
  /// Allow the regularized-atom Richardson scheme when no Green oracle exists.
  bool allow_regularized_atoms = true;
  std::string tag = "resolvent";
};

/// R^{kappa,V} mu(x): path occupation for the density, Green oracle or
/// regularized atoms (eps in {0.08, 0.04, 0.02} diam V, fit in eps^2) for atoms.
MCEstimate estimate_resolvent(const Process& p, const Domain& V, const Point& x, const MeasureSpec& mu, double kappa,
                              std::int64_t n, const PathConfig& cfg, const ResolventOptions& opts = {});

/// Exact Green function of V at (x, y) when one exists: b = 0, l = 0, kappa = 0, V a ball,
/// and an isotropic stable or scaled Brownian process.
std::optional<double> green_oracle(const Process& p, const Domain& V, const Point& x, const Point& y, double kappa);

/// E^kappa_x u(X_tau_V) = mean of fk_weight u(exit_pos); censored paths excluded and counted.
MCEstimate estimate_harmonic_extension(const Process& p, const Domain& V, const Point& x, const ScalarField& u,
                                       double kappa, std::int64_t n, const PathConfig& cfg,
                                       std::string_view tag = "harmonic");

/// Square cells of side `cell` tiling [lo, hi].
struct GreenGrid {
  Point lo;
  Point hi;
  double cell = 0.1;

  int cells_per_dim(int i) const;
  std::int64_t size() const;
  Point center(std::int64_t k) const;
  std::int64_t locate(const Point& y) const;  // -1 when outside
  double cell_volume() const;
};

struct GreenEstimate {
  GreenGrid grid;
  std::vector<double> density;    // occupation mass per cell / cell volume
  std::vector<double> std_error;  // per cell, same units
  MCEstimate total_mass;          // int_V G(x, y) dy
  std::int64_t n_samples = 0;
};

GreenEstimate estimate_green_density(const Process& p, const Domain& V, const Point& x, const GreenGrid& grid,
                                     double kappa, std::int64_t n, const PathConfig& cfg,
                                     std::string_view tag = "green");

/// Multilinear interpolant of a function sampled on a regular grid.
class TabulatedField {
 public:
  TabulatedField(const ScalarField& f, const Point& lo, const Point& hi, int nodes_per_dim);
  double operator()(const Point& y) const;

 private:
  Point lo_, step_;
  int n_ = 2;
  int d_ = 1;
  std::vector<double> values_;
};

struct ExteriorHit {
  MCEstimate direct;
  MCEstimate iw;
  double z = 0.0;
};

/// Both sides of E^kappa_x[1_{D^c} u(X_tau_V)] = R^{kappa,V}(int_{D^c} u(z) nu(z - .) dz)(x).
ExteriorHit estimate_exterior_hit(const Process& p, const Domain& V, const Domain& D, const ScalarField& u_ext,
                                  const Point& x, double kappa, std::int64_t n, const PathConfig& cfg);

struct WvEstimate {
  MCEstimate direct;
  MCEstimate iw_complement;
  double z = 0.0;
};

/// w_V(x) = P_x(X_tau_V in D \ V), directly and as 1 - R^V(nu_.(D^c))(x).
WvEstimate estimate_wv(const Process& p, const Domain& V, const Domain& D, const Point& x, std::int64_t n,
                       const PathConfig& cfg);

/// The corollary lower bounds 1 - int_V G_V nu_y(D^c) dy and 1 - sup_V nu_y(D^c) E_x tau_V
/// (the latter from the supplied exit-time estimate).
struct WvBounds {
  MCEstimate green_bound;
  MCEstimate sup_bound;
};
WvBounds wv_lower_bounds(const Process& p, const Domain& V, const Domain& D, const Point& x, std::int64_t n,
                         const PathConfig& cfg);

struct IdentityCheck {
  MCEstimate lhs;
  MCEstimate rhs;
  double z = 0.0;
};

struct DynkinOptions {
  std::int64_t n_outer = 1000;
  std::int64_t n_inner = 100;
  std::int64_t budget_cap = 50'000'000;
};

/// E_x[e^{-kappa tau_B} R^V mu(X_tau_B)] + R^B mu(x) versus R^V mu(x).
IdentityCheck check_dynkin(const Process& p, const Domain& B, const Domain& V, const MeasureSpec& mu, const Point& x,
                           double kappa, std::int64_t n, const PathConfig& cfg, const DynkinOptions& opts = {});

/// int g R^{kappa,V} f versus int f R^{kappa,*,V} g, the dual process having
/// drift -b and weight exp(int (-div b - kappa) ds). Outer integral by a Gauss
/// product grid with `nodes` points per dimension over the bounding box of V.
IdentityCheck check_duality(const Process& p, const Domain& V, const ScalarField& f, const ScalarField& g,
                            double kappa, std::int64_t n, const PathConfig& cfg, int nodes = 8);

/// R_alpha f(x) versus R_beta f(x) + (beta - alpha) R_alpha(R_beta f)(x). The
/// nested term picks one occupation point per outer path (weighted reservoir)
/// and estimates R_beta f there with n_inner independent paths.
IdentityCheck check_resolvent_identity(const Process& p, const Domain& V, const ScalarField& f, const Point& x,
                                       double alpha, double beta, std::int64_t n, std::int64_t n_outer,
                                       std::int64_t n_inner, const PathConfig& cfg);

/// E e^{-kappa tau} f(X_tau) by weights versus per-step killing.
IdentityCheck check_killing(const Process& p, const Domain& V, const Point& x, const ScalarField& f, double kappa,
                            std::int64_t n, const PathConfig& cfg);

/// One occupation point drawn with probability proportional to its mass, and the total mass.
struct OccupationDraw {
  Point y;
  double total_mass = 0.0;
  bool censored = false;
};
OccupationDraw draw_occupation_point(const Process& p, const Domain& V, const Point& x, double kappa,
                                     const PathConfig& cfg, Rng& rng);

/// Result row: estimator_id, params_hash, value, std_error, n, censored_fraction.
std::string csv_header();
std::string csv_row(std::string_view estimator_id, std::uint64_t params_hash, const MCEstimate& e);

}  // namespace levypot

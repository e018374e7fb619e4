#include "levypot/path_sim.hpp"

#include "levypot/exact_kernels.hpp"
#include "levypot/stable.hpp"

#include <Eigen/Eigenvalues>

namespace levypot {

std::string to_string(ExitMode m) {
  switch (m) {
    case ExitMode::JumpOvershoot: return "JumpOvershoot";
    case ExitMode::BoundaryCreep: return "BoundaryCreep";
    case ExitMode::Censored: return "Censored";
    case ExitMode::Killed: return "Killed";
  }
  return "?";
}

std::string to_string(Scheme s) { return s == Scheme::Euler ? "Euler" : "WalkOnSpheres"; }

void validate_process(const Process& p) {
  validate_triplet(p.triplet);
  if (p.drift.dim != p.dim()) throw ConfigError("drift dimension does not match the triplet");
  if (!p.drift.b) throw ConfigError("drift field has no evaluator");
}

namespace {

// Precomputed per-step quantities for one (process, dt) pair.
struct Stepper {
  enum class Kind { None, Isotropic, Cylindrical };

  int d = 1;
  double dt = 0.0;
  double sqdt = 0.0;
  Matrix sqrtQ;
  bool gauss = false;
  Kind kind = Kind::None;
  double alpha = 2.0;
  double jump_scale = 0.0;
  std::vector<double> cyl_alpha, cyl_scale;

  Stepper(const Process& p, double dt_) : d(p.dim()), dt(dt_), sqdt(std::sqrt(dt_)) {
    const Matrix& Q = p.triplet.Q;
    gauss = Q.cwiseAbs().maxCoeff() > 0.0;
    if (gauss) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (Q + Q.transpose())));
      const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      sqrtQ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
    if (const auto* iso = std::get_if<IsotropicStable>(&p.triplet.jump)) {
      set_isotropic(iso->s);
    } else if (const auto* mix = std::get_if<MixedLaplacianStable>(&p.triplet.jump)) {
      set_isotropic(mix->s);
    } else if (const auto* cyl = std::get_if<CylindricalStable>(&p.triplet.jump)) {
      kind = Kind::Cylindrical;
      for (double s : cyl->s) {
        cyl_alpha.push_back(2.0 * s);
        cyl_scale.push_back(std::pow(dt, 1.0 / (2.0 * s)));
      }
    }
  }

  void set_isotropic(double s) {
    kind = Kind::Isotropic;
    alpha = 2.0 * s;
    jump_scale = std::pow(dt, 1.0 / alpha);
  }

  void jump(Rng& rng, Point& J) const {
    J.setZero(d);
    switch (kind) {
      case Kind::None: break;
      case Kind::Isotropic:
        sample_isotropic_stable(alpha, rng, J);
        J *= jump_scale;
        break;
      case Kind::Cylindrical:
        for (int i = 0; i < d; ++i) J[i] = cyl_scale[i] * sample_symmetric_stable(cyl_alpha[i], rng);
        break;
    }
  }

  void gaussian(Rng& rng, Point& G) const {
    G.setZero(d);
    if (!gauss) return;
    Point n(d);
    for (int i = 0; i < d; ++i) n[i] = rng.normal();
    G = sqdt * (sqrtQ * n);
  }
};

}  // namespace

double default_horizon(const Process& p, const Domain& V) {
  const int d = p.dim();
  const double R = V.length_scale();
  double guess = kInf;
  std::visit(
      [&](const auto& j) {
        using J = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<J, IsotropicStable> || std::is_same_v<J, MixedLaplacianStable>) {
          guess = std::min(guess, expected_exit_time_ball(d, j.s, R, zero_point(d)));
        } else if constexpr (std::is_same_v<J, CylindricalStable>) {
          for (double s : j.s) guess = std::min(guess, expected_exit_time_ball(1, s, R, zero_point(1)));
        }
      },
      p.triplet.jump);
  const double qmax = p.triplet.Q.diagonal().maxCoeff();
  if (qmax > 0.0) guess = std::min(guess, R * R / qmax);
  if (std::isinf(guess)) {
    const double speed = p.drift.sup_bound + p.triplet.l.norm();
    if (speed > 0.0 && std::isfinite(speed)) guess = 2.0 * R / speed;
  }
  if (std::isinf(guess)) throw ConfigError("process has neither noise nor a bounded drift; set a horizon");
  return 1e6 * guess;
}

ExitSample simulate_until_exit(const Process& p, const Domain& V, const Point& x0, double kappa,
                               const PathConfig& cfg, Rng& rng, const PathOptions& opts) {
  if (!(cfg.dt > 0.0)) throw ArgumentError("dt must be positive");
  if (kappa < 0.0) throw ArgumentError("kappa must be >= 0");
  if (p.dim() != V.dim() || x0.size() != V.dim()) throw ArgumentError("dimension mismatch");
  if (!V.contains(x0)) throw DomainError("start point must lie in V");
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : default_horizon(p, V);
  if (cfg.dt > horizon) throw ArgumentError("dt exceeds the horizon");

  const Stepper st(p, cfg.dt);
  const int d = p.dim();
  const bool killing = opts.weight_mode == WeightMode::PerStepKilling;
  const double eps = 1e-8 * V.length_scale();
  const Point l = p.triplet.l;

  ExitSample out;
  Point x = x0, G(d), J(d), xn(d);
  double t = 0.0, logw = 0.0;
  for (;;) {
    if (t >= horizon) {
      out.exit_pos = x;
      out.exit_time = t;
      out.mode = ExitMode::Censored;
      out.fk_weight = std::exp(logw);
      return out;
    }
    if (opts.visitor) opts.visitor(x, t, cfg.dt * std::exp(logw));
    double pot = 0.0;
    if (!killing) pot = opts.potential ? opts.potential(x) : -kappa;
    st.gaussian(rng, G);
    st.jump(rng, J);
    xn = x + (p.drift(x) + l) * cfg.dt + G + J;
    ++out.steps;

    if (!V.contains(xn)) {
      double theta = 1.0;
      if (st.kind != Stepper::Kind::None && !V.contains(x + J)) {
        out.mode = ExitMode::JumpOvershoot;
        out.exit_pos = xn;
      } else {
        double lo = 0.0, hi = 1.0;
        const double len = (xn - x).norm();
        while ((hi - lo) * len > eps) {
          const double mid = 0.5 * (lo + hi);
          (V.contains(x + mid * (xn - x)) ? lo : hi) = mid;
        }
        theta = hi;
        out.mode = ExitMode::BoundaryCreep;
        out.exit_pos = V.project(x + hi * (xn - x));
      }
      out.exit_time = t + theta * cfg.dt;
      if (killing) {
        if (kappa > 0.0 && rng.uniform() > std::exp(-kappa * theta * cfg.dt)) {
          out.mode = ExitMode::Killed;
          out.fk_weight = 0.0;
          return out;
        }
        out.fk_weight = 1.0;
      } else {
        out.fk_weight = std::exp(logw + theta * cfg.dt * pot);
      }
      return out;
    }

    if (cfg.bridge_test && st.gauss) {
      // Crossing probability of the Brownian bridge against the tangent half-space.
      const Point nrm = V.outward_normal(xn);
      const double var = nrm.dot(p.triplet.Q * nrm);
      if (var > 0.0) {
        const double d1 = V.signed_distance(x), d2 = V.signed_distance(xn);
        const double prob = std::exp(-2.0 * d1 * d2 / (var * cfg.dt));
        if (rng.uniform() < prob) {
          out.mode = ExitMode::BoundaryCreep;
          out.exit_pos = V.project(xn);
          out.exit_time = t + 0.5 * cfg.dt;
          if (killing) {
            if (kappa > 0.0 && rng.uniform() > std::exp(-kappa * 0.5 * cfg.dt)) {
              out.mode = ExitMode::Killed;
              out.fk_weight = 0.0;
              return out;
            }
            out.fk_weight = 1.0;
          } else {
            out.fk_weight = std::exp(logw + 0.5 * cfg.dt * pot);
          }
          return out;
        }
      }
    }

    if (killing && kappa > 0.0 && rng.uniform() > std::exp(-kappa * cfg.dt)) {
      out.mode = ExitMode::Killed;
      out.exit_pos = xn;
      out.exit_time = t + cfg.dt;
      out.fk_weight = 0.0;
      return out;
    }
    x = xn;
    t += cfg.dt;
    logw += cfg.dt * pot;
  }
}

Point random_direction(int d, Rng& rng) {
  Point u(d);
  sample_direction(rng, u);
  return u;
}

Point sample_ball_occupation(int d, double s, const Point& center, double r, Rng& rng) {
  const double t = rng.gamma(s) / rng.gamma(0.5 * d);
  const double rho = r / std::sqrt(1.0 + t) * std::pow(rng.uniform(), 1.0 / (2.0 * s));
  return center + rho * random_direction(d, rng);
}

bool wos_supported(const Process& p) {
  if (!p.drift.identically_zero || p.triplet.l.cwiseAbs().maxCoeff() > 0.0) return false;
  const Matrix& Q = p.triplet.Q;
  const int d = p.dim();
  if (std::holds_alternative<IsotropicStable>(p.triplet.jump)) return Q.cwiseAbs().maxCoeff() == 0.0;
  if (std::holds_alternative<NoJump>(p.triplet.jump)) {
    const double q = Q(0, 0);
    return q > 0.0 && (Q - q * Matrix::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0;
  }
  return false;
}

ExitSample wos_exit(const Process& p, const Domain& V, const Point& x0, const PathConfig& cfg, Rng& rng,
                    const WosOptions& opts) {
  if (!wos_supported(p))
    throw UnsupportedError("walk-on-spheres needs b = 0, l = 0 and an isotropic stable or scaled Brownian process");
  if (x0.size() != V.dim() || p.dim() != V.dim()) throw ArgumentError("dimension mismatch");
  if (!V.contains(x0)) throw DomainError("start point must lie in V");
  const int d = p.dim();
  const auto* iso = std::get_if<IsotropicStable>(&p.triplet.jump);
  const double s = iso ? iso->s : 1.0;
  const double sigma2 = iso ? 0.0 : p.triplet.Q(0, 0);
  const double shell = cfg.wos_eps * V.length_scale();
  const int m = std::max(1, opts.samples_per_ball);
  constexpr std::int64_t kMaxSteps = 10'000'000;

  ExitSample out;
  out.exit_time = kNaN;
  Point x = x0;
  for (;;) {
    const double r = V.signed_distance(x);
    if (!iso && r < shell) {
      out.mode = ExitMode::BoundaryCreep;
      out.exit_pos = V.project(x);
      return out;
    }
    if (out.steps >= kMaxSteps) {
      out.mode = ExitMode::Censored;
      out.exit_pos = x;
      return out;
    }
    if (opts.visitor) {
      const double etau = iso ? expected_exit_time_ball(d, s, r, zero_point(d))
                              : expected_exit_time_ball(d, 1.0, r, zero_point(d), sigma2);
      for (int k = 0; k < m; ++k) opts.visitor(sample_ball_occupation(d, s, x, r, rng), kNaN, etau / m);
    }
    ++out.steps;
    if (iso) {
      const double b = rng.beta(s, 1.0 - s);
      x = x + (r / std::sqrt(b)) * random_direction(d, rng);
      if (!V.contains(x)) {
        out.mode = ExitMode::JumpOvershoot;
        out.exit_pos = x;
        return out;
      }
    } else {
      x = x + r * random_direction(d, rng);
    }
  }
}

ExitSample wos_exit_ball(double s, const Point& center, double radius, const Point& x0, Rng& rng) {
  if (!(s > 0.0 && s < 1.0)) throw ArgumentError("s must lie in (0, 1)");
  const int d = static_cast<int>(center.size());
  const Domain ball = Domain::ball(center, radius);
  if (!ball.contains(x0)) throw DomainError("start point must lie inside the ball");
  Process p{isotropic_stable(d, s), make_drift("zero", d)};
  PathConfig cfg;
  cfg.scheme = Scheme::WalkOnSpheres;
  return wos_exit(p, ball, x0, cfg, rng);
}

ExitSample sample_exit(const Process& p, const Domain& V, const Point& x0, double kappa, const PathConfig& cfg,
                       Rng& rng, const PathOptions& opts) {
  if (cfg.scheme == Scheme::WalkOnSpheres) {
    if (kappa != 0.0 || opts.potential || opts.weight_mode != WeightMode::Exponential)
      throw UnsupportedError("walk-on-spheres does not track time; kappa must be 0");
    WosOptions wo;
    wo.visitor = opts.visitor;
    return wos_exit(p, V, x0, cfg, rng, wo);
  }
  return simulate_until_exit(p, V, x0, kappa, cfg, rng, opts);
}

double occupation_functional(const Process& p, const Domain& V, const Point& x0,
                             const std::function<double(const Point&)>& f, double kappa, const PathConfig& cfg,
                             Rng& rng) {
  double acc = 0.0;
  PathOptions opts;
  opts.visitor = [&](const Point& x, double, double mass) { acc += mass * f(x); };
  if (cfg.scheme == Scheme::WalkOnSpheres) {
    sample_exit(p, V, x0, kappa, cfg, rng, opts);
  } else {
    simulate_until_exit(p, V, x0, kappa, cfg, rng, opts);
  }
  return acc;
}

}  // namespace levypot

#include "levypot/polarity.hpp"

#include "levypot/exact_kernels.hpp"
#include "levypot/quadrature.hpp"
#include "levypot/stats.hpp"

#include <Eigen/Dense>

namespace levypot {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Polar:
      return "polar";
    case Verdict::Nonpolar:
      return "nonpolar";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

double Target::distance(const Point& x) const {
  const Point w = x - center;
  return (kind == Kind::Ball ? w.norm() : w.head(codim).norm()) - eps;
}

MCEstimate hitting_probability(const Process& p, const Target& target, const Point& x, std::int64_t n,
                               const PathConfig& cfg, const HittingOptions& opts) {
  const int d = p.dim();
  if (x.size() != d || target.center.size() != d) throw ArgumentError("hitting_probability: dimension mismatch");
  if (!(target.eps > 0.0)) throw ArgumentError("hitting_probability: target size must be positive");
  if (target.kind == Target::Kind::Tube && (target.codim < 1 || target.codim > d))
    throw ArgumentError("hitting_probability: tube codimension must be in [1, d]");
  const double dist = target.distance(x);
  if (!(dist > 0.0)) throw ArgumentError("hitting_probability: start point lies in the target closure");
  const double R = opts.reference_radius > 0.0 ? opts.reference_radius
                                                : std::max(10.0 * dist, 2.0 * (x - target.center).norm());
  if (!((x - target.center).norm() < R)) throw ArgumentError("hitting_probability: start point outside the reference ball");
  if (!(target.eps < R)) return MCEstimate::exact(1.0, n);
  const Domain region = target.kind == Target::Kind::Ball
                            ? Domain::annulus(target.center, target.eps, R)
                            : Domain::tube_complement(target.center, R, target.codim, target.eps);
  const double tol = 1e-6 * R;
  const StreamKey key = estimator_key(cfg.seed, opts.tag, x, hash_double(hash_double(0, target.eps), opts.kappa));
  struct Acc {
    MomentAccumulator m;
    std::int64_t censored = 0;
    void merge(const Acc& o) {
      m.merge(o.m);
      censored += o.censored;
    }
  };
  const auto acc = run_paths<Acc>(n, cfg.threads, [&](std::int64_t c, std::int64_t i, Acc& a) {
    Rng rng(key, c, i);
    const ExitSample e = sample_exit(p, region, x, opts.kappa, cfg, rng);
    if (e.mode == ExitMode::Censored) {
      ++a.censored;
      a.m.add(0.0);
      return;
    }
    const bool hit = target.distance(e.exit_pos) <= tol && (e.exit_pos - target.center).norm() < R;
    a.m.add(hit ? e.fk_weight : 0.0);
  });
  MCEstimate out;
  out.value = acc.m.mean();
  out.std_error = acc.m.std_error();
  out.n_samples = n;
  out.censored_fraction = n > 0 ? static_cast<double>(acc.censored) / static_cast<double>(n) : 0.0;
  out.flagged = out.censored_fraction > kCensoringThreshold;
  return out;
}

std::vector<double> default_eps_ladder(const Point& x, const Point& center, int rungs) {
  std::vector<double> out;
  double e = (x - center).norm() / 8.0;
  for (int k = 0; k < rungs; ++k, e *= 0.5) out.push_back(e);
  return out;
}

std::vector<LadderEntry> hitting_ladder(const Process& p, const Target& target, const Point& x,
                                        const std::vector<double>& eps, std::int64_t n, const PathConfig& cfg,
                                        const HittingOptions& opts) {
  std::vector<LadderEntry> out;
  for (double e : eps) {
    Target t = target;
    t.eps = e;
    const MCEstimate h = hitting_probability(p, t, x, n, cfg, opts);
    out.push_back({e, h.value, h.std_error, n});
  }
  return out;
}

PolarityVerdict polar_extrapolate(const std::vector<LadderEntry>& evidence) {
  if (evidence.size() < 4) throw ArgumentError("polar_extrapolate: need at least four ladder rungs");
  for (std::size_t i = 1; i < evidence.size(); ++i)
    if (!(evidence[i].eps < evidence[i - 1].eps && evidence[i].eps > 0.0))
      throw ArgumentError("polar_extrapolate: eps ladder must decrease strictly");
  PolarityVerdict v;
  v.evidence = evidence;
  std::int64_t n = 0;
  bool all_zero = true;
  for (const LadderEntry& e : evidence) {
    n = std::max(n, e.n);
    all_zero = all_zero && e.estimate == 0.0;
  }
  const double floor = n > 0 ? 10.0 / static_cast<double>(n) : 0.0;
  if (all_zero) {
    v.verdict = Verdict::Polar;
    v.note = "all estimates are zero";
    return v;
  }
  const auto m = static_cast<Eigen::Index>(evidence.size());
  // Errors below the binomial resolution of n paths are not trusted.
  auto sigma = [&](const LadderEntry& e) {
    return std::max(e.std_error, e.n > 0 ? 1.0 / static_cast<double>(e.n) : 1e-300);
  };

  // Weighted log-log fit over positive rungs.
  {
    std::vector<std::pair<double, double>> pts;
    std::vector<double> w;
    for (const LadderEntry& e : evidence) {
      if (e.estimate <= 0.0) continue;
      pts.emplace_back(std::log(e.eps), std::log(e.estimate));
      const double sl = sigma(e) / e.estimate;
      w.push_back(1.0 / (sl * sl));
    }
    if (pts.size() >= 2) {
      double sw = 0, sx = 0, sy = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        sw += w[i];
        sx += w[i] * pts[i].first;
        sy += w[i] * pts[i].second;
      }
      const double mx = sx / sw, my = sy / sw;
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        sxx += w[i] * (pts[i].first - mx) * (pts[i].first - mx);
        sxy += w[i] * (pts[i].first - mx) * (pts[i].second - my);
      }
      v.fitted_exponent = sxx > 0.0 ? sxy / sxx : 0.0;
      v.exponent_std_error = sxx > 0.0 ? 1.0 / std::sqrt(sxx) : kInf;
    }
  }

  // Profiled fit p = p0 + c eps^g for the limit.
  {
    double best = kInf;
    for (int k = 1; k <= 300; ++k) {
      const double g = 0.01 * k;
      Eigen::MatrixXd A(m, 2);
      Eigen::VectorXd y(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const LadderEntry& e = evidence[static_cast<std::size_t>(i)];
        const double s = sigma(e);
        A(i, 0) = 1.0 / s;
        A(i, 1) = std::pow(e.eps, g) / s;
        y[i] = e.estimate / s;
      }
      const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
      const double sse = (A * coef - y).squaredNorm();
      if (sse < best) {
        best = sse;
        v.limit = coef[0];
        const Eigen::Matrix2d cov = (A.transpose() * A).inverse();
        v.limit_std_error = std::sqrt(std::max(0.0, cov(0, 0)));
      }
    }
  }

  bool decreasing = true;
  for (std::size_t i = 1; i < evidence.size(); ++i) {
    const double tol = 2.0 * std::hypot(sigma(evidence[i]), sigma(evidence[i - 1]));
    if (evidence[i].estimate > evidence[i - 1].estimate + tol) decreasing = false;
  }
  if (v.limit - 2.0 * v.limit_std_error > floor) {
    v.verdict = Verdict::Nonpolar;
    v.note = "fitted limit above the detection floor";
  } else if (decreasing && v.fitted_exponent - 2.0 * v.exponent_std_error > 0.0) {
    v.verdict = Verdict::Polar;
    v.note = "power-law decay extrapolates below the detection floor";
  } else {
    v.verdict = Verdict::Inconclusive;
    v.note = "fit does not separate the limit from the detection floor";
  }
  return v;
}

bool fourier_points_polar(const JumpSpec& jump, bool gaussian_part, int k) {
  // For psi(xi) ~ sum_i |xi_i|^{a_i}, int_{R^k} 1/(1 + psi) is infinite iff sum_i 1/a_i >= 1.
  if (k < 1) throw ArgumentError("fourier_points_polar: k must be positive");
  std::vector<double> growth(static_cast<std::size_t>(k), 0.0);
  std::visit(overloaded{[&](const NoJump&) {},
                        [&](const IsotropicStable& v) { std::fill(growth.begin(), growth.end(), 2.0 * v.s); },
                        [&](const CylindricalStable& v) {
                          if (static_cast<int>(v.s.size()) < k) throw ArgumentError("cylindrical exponents too short");
                          for (int i = 0; i < k; ++i) growth[static_cast<std::size_t>(i)] = 2.0 * v.s[static_cast<std::size_t>(i)];
                        },
                        [&](const MixedLaplacianStable& v) { std::fill(growth.begin(), growth.end(), 2.0 * v.s); }},
             jump);
  if (gaussian_part) std::fill(growth.begin(), growth.end(), 2.0);
  double sum = 0.0;
  for (double a : growth) {
    if (!(a > 0.0)) throw UnsupportedError("fourier_points_polar: degenerate symbol");
    sum += 1.0 / a;
  }
  return sum >= 1.0 - 1e-12;
}

LilResult lil_singleton_test(const JumpSpec& jump, int d) {
  require_dim(d);
  if (!has_jumps(jump)) throw UnsupportedError("lil_singleton_test: needs a jump part");
  if (std::holds_alternative<MixedLaplacianStable>(jump))
    throw UnsupportedError("lil_singleton_test: the LIL argument assumes Q = 0");
  validate_jump(jump, d);
  LilResult r;
  r.beta = bg_index(jump, d);
  r.window_lo = std::max(r.beta, 1.0);
  r.window_hi = static_cast<double>(d);
  r.window_nonempty = r.window_lo < r.window_hi;
  r.paper_beta = r.beta;
  if (const auto* cyl = std::get_if<CylindricalStable>(&jump))
    r.paper_beta = *std::min_element(cyl->s.begin(), cyl->s.end());
  r.paper_window_nonempty = std::max(r.paper_beta, 1.0) < r.window_hi;
  if (r.window_nonempty) {
    r.polar = true;
    r.criterion = "lil";
  } else {
    r.polar = fourier_points_polar(jump, false, d);
    r.criterion = "fourier";
  }
  return r;
}

PolarityVerdict hyperplane_polarity(const LevyTriplet& triplet, int d, int codim, const HyperplaneOptions& opts) {
  if (d < 3) throw UnsupportedError("hyperplane_polarity: needs d >= 3");
  if (codim < 2 || codim > d) throw UnsupportedError("hyperplane_polarity: needs 2 <= codim <= d");
  if (triplet.dim() != d) throw ArgumentError("hyperplane_polarity: dimension mismatch");
  const JumpSpec& jump = triplet.jump;
  const bool gaussian = triplet.Q.cwiseAbs().maxCoeff() > 0.0;
  PolarityVerdict v;
  bool analytic_polar = false;
  // Projected process Pi(L) in R^2: the LIL window (beta_{Pi L} v 1, 2).
  if (!gaussian && has_jumps(jump)) {
    JumpSpec projected = jump;
    if (const auto* cyl = std::get_if<CylindricalStable>(&jump))
      projected = CylindricalStable{std::vector<double>(cyl->s.begin(), cyl->s.begin() + 2)};
    const double beta = bg_index(projected, 2);
    analytic_polar = std::max(beta, 1.0) < 2.0;
    v.note = "LIL window (" + std::to_string(std::max(beta, 1.0)) + ", 2)";
  }
  if (!analytic_polar) {
    analytic_polar = fourier_points_polar(jump, gaussian, codim);
    v.note = "Fourier criterion for the projected process";
  }
  v.verdict = analytic_polar ? Verdict::Polar : Verdict::Nonpolar;
  if (opts.n > 0) {
    Point x = opts.x;
    if (x.size() == 0) {
      x = zero_point(d);
      x[0] = 0.5;
    }
    const Process p{triplet, make_drift("zero", d)};
    HittingOptions ho;
    ho.reference_radius = opts.reference_radius;
    ho.tag = "hyperplane";
    const Target tube = Target::tube(zero_point(d), codim, 0.1);
    const std::vector<double> eps = default_eps_ladder(x, zero_point(d));
    const PolarityVerdict mc = polar_extrapolate(hitting_ladder(p, tube, x, eps, opts.n, opts.cfg, ho));
    v.evidence = mc.evidence;
    v.fitted_exponent = mc.fitted_exponent;
    v.exponent_std_error = mc.exponent_std_error;
    v.limit = mc.limit;
    v.limit_std_error = mc.limit_std_error;
    if (mc.verdict != Verdict::Inconclusive && mc.verdict != v.verdict) {
      v.verdict = Verdict::Inconclusive;
      v.note += "; tube ladder disagrees";
    }
  }
  return v;
}

double capacity_estimate(const JumpSpec& jump, int d, double eps, double kappa, double mass) {
  const auto* iso = std::get_if<IsotropicStable>(&jump);
  if (!iso) throw UnsupportedError("capacity_estimate: needs an isotropic stable kernel");
  if (!(eps > 0.0)) throw ArgumentError("capacity_estimate: eps must be positive");
  if (kappa < 0.0) throw ArgumentError("capacity_estimate: kappa must be nonnegative");
  if (mass < 0.0) throw ArgumentError("capacity_estimate: mass must be nonnegative");
  if (mass == 0.0) return 0.0;
  const double s = iso->s;
  const double c = riesz_constant(d, s);
  // The potential of the uniform measure is radially decreasing, so its supremum is at the centre:
  // m / |B| * int_0^eps c r^{2s-d} |S^{d-1}| r^{d-1} dr.
  const double vol = unit_ball_volume(d) * std::pow(eps, d);
  const double area = d * unit_ball_volume(d);
  const double radial = quad::integrate_endpoint_singular(
      [&](double r) { return c * area * std::pow(r, 2.0 * s - 1.0); }, 0.0, eps, 1e-12);
  const double sup_potential = mass / vol * radial;
  return mass / sup_potential;
}

}  // namespace levypot

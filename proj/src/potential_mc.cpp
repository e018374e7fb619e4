#include "levypot/potential_mc.hpp"

#include "levypot/exact_kernels.hpp"
#include "levypot/quadrature.hpp"
#include "levypot/stats.hpp"

#include <cstdio>

namespace levypot {

MCEstimate combine(const MCEstimate& a, const MCEstimate& b, double c) {
  MCEstimate r;
  r.value = a.value + c * b.value;
  r.std_error = std::hypot(a.std_error, c * b.std_error);
  r.n_samples = a.n_samples + b.n_samples;
  r.censored_fraction = std::max(a.censored_fraction, b.censored_fraction);
  r.flagged = a.flagged || b.flagged;
  return r;
}

MCEstimate scaled(const MCEstimate& a, double c) {
  MCEstimate r = a;
  r.value *= c;
  r.std_error *= std::abs(c);
  return r;
}

double z_score(const MCEstimate& a, const MCEstimate& b) {
  const double se = std::hypot(a.std_error, b.std_error);
  const double diff = std::abs(a.value - b.value);
  if (se == 0.0) return diff == 0.0 ? 0.0 : kInf;
  return diff / se;
}

StreamKey estimator_key(std::uint64_t seed, std::string_view tag, const Point& x, std::uint64_t extra) {
  std::uint64_t h = hash_string(tag);
  for (Eigen::Index i = 0; i < x.size(); ++i) h = hash_double(h, x[i]);
  return {seed, hash_combine(h, extra)};
}

namespace {

struct PathAcc {
  MomentAccumulator m;
  std::int64_t censored = 0;

  void merge(const PathAcc& o) {
    m.merge(o.m);
    censored += o.censored;
  }
};

MCEstimate finish(const PathAcc& a, std::int64_t n) {
  MCEstimate e;
  e.value = a.m.mean();
  e.std_error = a.m.std_error();
  e.n_samples = n;
  e.censored_fraction = n > 0 ? static_cast<double>(a.censored) / static_cast<double>(n) : 0.0;
  e.flagged = e.censored_fraction > kCensoringThreshold;
  return e;
}

void require_inside(const Domain& V, const Point& x, const char* what) {
  if (x.size() != V.dim()) throw ArgumentError(std::string(what) + ": dimension mismatch");
  if (!V.contains(x)) throw DomainError(std::string(what) + ": evaluation point must lie in V");
}

// E int_0^tau w_t f(X_t) dt, with w the exponential weight of `potential` (default -kappa).
MCEstimate occupation_estimate(const Process& p, const Domain& V, const Point& x, const ScalarField& f, double kappa,
                               const ScalarField& potential, std::int64_t n, const PathConfig& cfg, StreamKey key) {
  const auto acc = run_paths<PathAcc>(n, cfg.threads, [&](std::int64_t c, std::int64_t i, PathAcc& a) {
    Rng rng(key, c, i);
    double total = 0.0;
    PathOptions opts;
    opts.potential = potential;
    opts.visitor = [&](const Point& y, double, double mass) { total += mass * f(y); };
    const ExitSample e = sample_exit(p, V, x, kappa, cfg, rng, opts);
    if (e.mode == ExitMode::Censored) ++a.censored;
    a.m.add(total);
  });
  return finish(acc, n);
}

bool is_brownian_isotropic(const Process& p, double* sigma2) {
  if (!std::holds_alternative<NoJump>(p.triplet.jump)) return false;
  const Matrix& Q = p.triplet.Q;
  const double q = Q(0, 0);
  if (!(q > 0.0) || (Q - q * Matrix::Identity(p.dim(), p.dim())).cwiseAbs().maxCoeff() != 0.0) return false;
  *sigma2 = q;
  return true;
}

}  // namespace

std::optional<double> green_oracle(const Process& p, const Domain& V, const Point& x, const Point& y, double kappa) {
  if (kappa != 0.0 || !p.drift.identically_zero || p.triplet.l.cwiseAbs().maxCoeff() > 0.0) return std::nullopt;
  const Ball* ball = V.as_ball();
  if (!ball) return std::nullopt;
  const int d = p.dim();
  if (!V.contains(x) || !V.contains(y)) return 0.0;
  const Point xc = x - ball->center, yc = y - ball->center;
  if (const auto* iso = std::get_if<IsotropicStable>(&p.triplet.jump)) {
    if (p.triplet.Q.cwiseAbs().maxCoeff() > 0.0) return std::nullopt;
    return green_ball(d, iso->s, ball->radius, xc, yc);
  }
  double sigma2 = 0.0;
  if (is_brownian_isotropic(p, &sigma2)) return green_ball(d, 1.0, ball->radius, xc, yc) / sigma2;
  return std::nullopt;
}

MCEstimate estimate_resolvent(const Process& p, const Domain& V, const Point& x, const MeasureSpec& mu, double kappa,
                              std::int64_t n, const PathConfig& cfg, const ResolventOptions& opts) {
  require_inside(V, x, "estimate_resolvent");
  if (mu.empty()) return MCEstimate::exact(0.0, n);
  MCEstimate total = MCEstimate::exact(0.0);
  if (mu.density) {
    total = combine(total, occupation_estimate(p, V, x, mu.density, kappa, nullptr, n, cfg,
                                               estimator_key(cfg.seed, opts.tag, x)));
  }
  std::uint64_t atom_index = 0;
  for (const Atom& atom : mu.atoms) {
    ++atom_index;
    if (atom.mass < 0.0 || !std::isfinite(atom.mass)) throw ArgumentError("atom masses must be finite and >= 0");
    if (atom.mass == 0.0) continue;
    if (const auto g = green_oracle(p, V, x, atom.x, kappa)) {
      total = combine(total, MCEstimate::exact(atom.mass * *g));
      continue;
    }
    if (!opts.allow_regularized_atoms)
      throw UnsupportedError("estimate_resolvent: no Green evaluation method for atoms in this configuration");
    // Regularized atoms: uniform density on B_eps(x0), eps on a geometric ladder,
    // linear fit in eps^2 extrapolated to eps = 0.
    const int d = V.dim();
    const double diam = V.diameter();
    std::vector<double> t, val, se;
    for (double frac : {0.08, 0.04, 0.02}) {
      const double eps = frac * diam;
      const double vol = unit_ball_volume(d) * std::pow(eps, d);
      const Point c = atom.x;
      ScalarField bump = [c, eps, vol](const Point& y) { return (y - c).norm() < eps ? 1.0 / vol : 0.0; };
      const MCEstimate r = occupation_estimate(
          p, V, x, bump, kappa, nullptr, n, cfg,
          estimator_key(cfg.seed, opts.tag + "/atom", x, hash_combine(atom_index, hash_double(0, frac))));
      t.push_back(eps * eps);
      val.push_back(r.value);
      se.push_back(r.std_error);
      total.censored_fraction = std::max(total.censored_fraction, r.censored_fraction);
    }
    const double tm = (t[0] + t[1] + t[2]) / 3.0;
    double sxx = 0.0;
    for (double ti : t) sxx += (ti - tm) * (ti - tm);
    double v0 = 0.0, var0 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double ck = 1.0 / 3.0 - tm * (t[k] - tm) / sxx;  // intercept weights
      v0 += ck * val[k];
      var0 += ck * ck * se[k] * se[k];
    }
    MCEstimate a;
    a.value = atom.mass * v0;
    a.std_error = atom.mass * std::sqrt(var0);
    a.n_samples = 3 * n;
    total = combine(total, a);
  }
  total.n_samples = n;
  total.flagged = total.censored_fraction > kCensoringThreshold;
  return total;
}

MCEstimate estimate_harmonic_extension(const Process& p, const Domain& V, const Point& x, const ScalarField& u,
                                       double kappa, std::int64_t n, const PathConfig& cfg, std::string_view tag) {
  require_inside(V, x, "estimate_harmonic_extension");
  const StreamKey key = estimator_key(cfg.seed, tag, x, hash_double(0, kappa));
  const auto acc = run_paths<PathAcc>(n, cfg.threads, [&](std::int64_t c, std::int64_t i, PathAcc& a) {
    Rng rng(key, c, i);
    const ExitSample e = sample_exit(p, V, x, kappa, cfg, rng);
    if (e.mode == ExitMode::Censored) {
      ++a.censored;
      return;
    }
    a.m.add(e.fk_weight * u(e.exit_pos));
  });
  MCEstimate e = finish(acc, n);
  return e;
}

// ---------------------------------------------------------------------------

int GreenGrid::cells_per_dim(int i) const {
  return std::max(1, static_cast<int>(std::ceil((hi[i] - lo[i]) / cell - 1e-9)));
}

std::int64_t GreenGrid::size() const {
  std::int64_t s = 1;
  for (Eigen::Index i = 0; i < lo.size(); ++i) s *= cells_per_dim(static_cast<int>(i));
  return s;
}

Point GreenGrid::center(std::int64_t k) const {
  Point c(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    const int m = cells_per_dim(static_cast<int>(i));
    c[i] = lo[i] + (static_cast<double>(k % m) + 0.5) * cell;
    k /= m;
  }
  return c;
}

std::int64_t GreenGrid::locate(const Point& y) const {
  std::int64_t k = 0, stride = 1;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    const int m = cells_per_dim(static_cast<int>(i));
    const double u = (y[i] - lo[i]) / cell;
    if (!(u >= 0.0) || u >= m) return -1;
    k += stride * static_cast<std::int64_t>(u);
    stride *= m;
  }
  return k;
}

double GreenGrid::cell_volume() const { return std::pow(cell, static_cast<double>(lo.size())); }

namespace {

struct GreenAcc {
  std::vector<KahanSum> s1, s2;
  MomentAccumulator total;
  std::int64_t censored = 0;

  void merge(const GreenAcc& o) {
    if (s1.size() < o.s1.size()) {
      s1.resize(o.s1.size());
      s2.resize(o.s2.size());
    }
    for (std::size_t k = 0; k < o.s1.size(); ++k) {
      s1[k].merge(o.s1[k]);
      s2[k].merge(o.s2[k]);
    }
    total.merge(o.total);
    censored += o.censored;
  }
};

}  // namespace

GreenEstimate estimate_green_density(const Process& p, const Domain& V, const Point& x, const GreenGrid& grid,
                                     double kappa, std::int64_t n, const PathConfig& cfg, std::string_view tag) {
  require_inside(V, x, "estimate_green_density");
  if (grid.lo.size() != V.dim() || grid.hi.size() != V.dim() || !(grid.cell > 0.0))
    throw ArgumentError("estimate_green_density: malformed grid");
  const std::int64_t cells = grid.size();
  if (cells <= 0 || (grid.hi - grid.lo).minCoeff() <= 0.0) throw ArgumentError("estimate_green_density: empty grid");
  const StreamKey key = estimator_key(cfg.seed, tag, x, hash_double(0, kappa));
  GreenAcc init;
  init.s1.resize(static_cast<std::size_t>(cells));
  init.s2.resize(static_cast<std::size_t>(cells));
  const auto acc = run_paths<GreenAcc>(
      n, cfg.threads,
      [&](std::int64_t c, std::int64_t i, GreenAcc& a) {
        thread_local std::vector<double> scratch;
        thread_local std::vector<std::int64_t> touched;
        scratch.assign(static_cast<std::size_t>(cells), 0.0);
        touched.clear();
        Rng rng(key, c, i);
        double total = 0.0;
        PathOptions opts;
        opts.visitor = [&](const Point& y, double, double mass) {
          total += mass;
          const std::int64_t k = grid.locate(y);
          if (k < 0) return;
          if (scratch[static_cast<std::size_t>(k)] == 0.0) touched.push_back(k);
          scratch[static_cast<std::size_t>(k)] += mass;
        };
        const ExitSample e = sample_exit(p, V, x, kappa, cfg, rng, opts);
        if (e.mode == ExitMode::Censored) ++a.censored;
        for (std::int64_t k : touched) {
          const double m = scratch[static_cast<std::size_t>(k)];
          a.s1[static_cast<std::size_t>(k)].add(m);
          a.s2[static_cast<std::size_t>(k)].add(m * m);
        }
        a.total.add(total);
      },
      init);
  GreenEstimate out;
  out.grid = grid;
  out.n_samples = n;
  const double vol = grid.cell_volume(), nn = static_cast<double>(n);
  for (std::int64_t k = 0; k < cells; ++k) {
    const double m = acc.s1[static_cast<std::size_t>(k)].value() / nn;
    const double var = std::max(0.0, (acc.s2[static_cast<std::size_t>(k)].value() - nn * m * m) / (nn - 1.0));
    out.density.push_back(m / vol);
    out.std_error.push_back(std::sqrt(var / nn) / vol);
  }
  PathAcc tot;
  tot.m = acc.total;
  tot.censored = acc.censored;
  out.total_mass = finish(tot, n);
  return out;
}

// ---------------------------------------------------------------------------

TabulatedField::TabulatedField(const ScalarField& f, const Point& lo, const Point& hi, int nodes_per_dim)
    : lo_(lo), n_(std::max(2, nodes_per_dim)), d_(static_cast<int>(lo.size())) {
  step_ = (hi - lo) / static_cast<double>(n_ - 1);
  std::int64_t total = 1;
  for (int i = 0; i < d_; ++i) total *= n_;
  values_.resize(static_cast<std::size_t>(total));
  Point y(d_);
  for (std::int64_t k = 0; k < total; ++k) {
    std::int64_t r = k;
    for (int i = 0; i < d_; ++i) {
      y[i] = lo_[i] + static_cast<double>(r % n_) * step_[i];
      r /= n_;
    }
    values_[static_cast<std::size_t>(k)] = f(y);
  }
}

double TabulatedField::operator()(const Point& y) const {
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int i = 0; i < d_; ++i) {
    double u = (y[i] - lo_[i]) / step_[i];
    u = std::clamp(u, 0.0, static_cast<double>(n_ - 1));
    int b = std::min(static_cast<int>(u), n_ - 2);
    base[i] = b;
    frac[i] = u - b;
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d_); ++corner) {
    double w = 1.0;
    std::int64_t k = 0, stride = 1;
    for (int i = 0; i < d_; ++i) {
      const int bit = (corner >> i) & 1;
      w *= bit ? frac[i] : 1.0 - frac[i];
      k += stride * (base[i] + bit);
      stride *= n_;
    }
    if (w != 0.0) acc += w * values_[static_cast<std::size_t>(k)];
  }
  return acc;
}

namespace {

int table_nodes(int d) { return d == 1 ? 513 : d == 2 ? 97 : d == 3 ? 25 : 9; }

// Tabulates y -> F(y) over the bounding box of V; nodes outside V use the
// nearest boundary point, which lies in D because V is compactly contained.
TabulatedField tabulate_on(const Domain& V, const ScalarField& F) {
  auto ext = [&](const Point& y) { return F(V.contains(y) ? y : V.project(y)); };
  return TabulatedField(ext, V.bbox_lo(), V.bbox_hi(), table_nodes(V.dim()));
}

void require_compact(const Domain& V, const Domain& D) {
  if (V.dim() != D.dim()) throw ArgumentError("V and D dimensions differ");
  if (!D.compactly_contains(V)) throw DomainError("V must be compactly contained in D");
}

}  // namespace

ExteriorHit estimate_exterior_hit(const Process& p, const Domain& V, const Domain& D, const ScalarField& u_ext,
                                  const Point& x, double kappa, std::int64_t n, const PathConfig& cfg) {
  require_compact(V, D);
  require_inside(V, x, "estimate_exterior_hit");
  ExteriorHit out;
  if (!has_jumps(p.triplet.jump)) {
    out.direct = MCEstimate::exact(0.0, n);
    out.iw = MCEstimate::exact(0.0, n);
    return out;
  }
  out.direct = estimate_harmonic_extension(
      p, V, x, [&](const Point& z) { return D.contains(z) ? 0.0 : u_ext(z); }, kappa, n, cfg, "exterior-direct");
  const JumpSpec jump = p.triplet.jump;
  const TabulatedField f = tabulate_on(V, [&](const Point& y) { return exterior_jump_integral(jump, D, y, u_ext); });
  ResolventOptions ro;
  ro.tag = "exterior-iw";
  out.iw = estimate_resolvent(p, V, x, MeasureSpec::from_density(std::cref(f)), kappa, n, cfg, ro);
  out.z = z_score(out.direct, out.iw);
  return out;
}

WvEstimate estimate_wv(const Process& p, const Domain& V, const Domain& D, const Point& x, std::int64_t n,
                       const PathConfig& cfg) {
  require_compact(V, D);
  require_inside(V, x, "estimate_wv");
  WvEstimate out;
  out.direct = estimate_harmonic_extension(
      p, V, x, [&](const Point& z) { return D.contains(z) ? 1.0 : 0.0; }, 0.0, n, cfg, "wv-direct");
  if (!has_jumps(p.triplet.jump)) {
    out.iw_complement = MCEstimate::exact(1.0, n);
  } else {
    const JumpSpec jump = p.triplet.jump;
    const TabulatedField f = tabulate_on(V, [&](const Point& y) { return exterior_jump_mass(jump, D, y); });
    ResolventOptions ro;
    ro.tag = "wv-iw";
    const MCEstimate iw = estimate_resolvent(p, V, x, MeasureSpec::from_density(std::cref(f)), 0.0, n, cfg, ro);
    out.iw_complement = iw;
    out.iw_complement.value = 1.0 - iw.value;
  }
  out.z = z_score(out.direct, out.iw_complement);
  return out;
}

WvBounds wv_lower_bounds(const Process& p, const Domain& V, const Domain& D, const Point& x, std::int64_t n,
                         const PathConfig& cfg) {
  WvBounds out;
  const WvEstimate w = estimate_wv(p, V, D, x, n, cfg);
  out.green_bound = w.iw_complement;
  double sup = 0.0;
  if (has_jumps(p.triplet.jump)) {
    std::vector<Point> probes = halton_points(V.bbox_lo(), V.bbox_hi(), 512);
    for (const Point& y : halton_points(V.bbox_lo(), V.bbox_hi(), 256)) probes.push_back(V.project(y));
    for (const Point& y : probes) {
      if (!D.contains(y)) continue;
      sup = std::max(sup, exterior_jump_mass(p.triplet.jump, D, y));
    }
  }
  ResolventOptions ro;
  ro.tag = "wv-exit-time";
  const MCEstimate tau = estimate_resolvent(p, V, x, MeasureSpec::lebesgue(), 0.0, n, cfg, ro);
  out.sup_bound = tau;
  out.sup_bound.value = 1.0 - sup * tau.value;
  out.sup_bound.std_error = sup * tau.std_error;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_subset(const Domain& B, const Domain& V) {
  if (B.dim() != V.dim()) throw ArgumentError("B and V dimensions differ");
  const double tol = 1e-12 * V.length_scale();
  for (const Point& y : halton_points(B.bbox_lo(), B.bbox_hi(), 2000)) {
    if (!B.contains(y)) continue;
    if (V.signed_distance(y) < -tol) throw DomainError("B must be contained in V");
  }
}

}  // namespace

IdentityCheck check_dynkin(const Process& p, const Domain& B, const Domain& V, const MeasureSpec& mu, const Point& x,
                           double kappa, std::int64_t n, const PathConfig& cfg, const DynkinOptions& opts) {
  require_subset(B, V);
  require_inside(B, x, "check_dynkin");
  IdentityCheck out;
  if (mu.empty()) {
    out.lhs = out.rhs = MCEstimate::exact(0.0, n);
    return out;
  }
  if (opts.n_outer * opts.n_inner > opts.budget_cap)
    throw BudgetError("check_dynkin: n_outer * n_inner exceeds the budget cap");
  const StreamKey key = estimator_key(cfg.seed, "dynkin-outer", x, hash_double(0, kappa));
  PathConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  const auto acc = run_paths<PathAcc>(opts.n_outer, cfg.threads, [&](std::int64_t c, std::int64_t i, PathAcc& a) {
    Rng rng(key, c, i);
    const ExitSample e = sample_exit(p, B, x, kappa, cfg, rng);
    if (e.mode == ExitMode::Censored) {
      ++a.censored;
      return;
    }
    if (!V.contains(e.exit_pos)) {
      a.m.add(0.0);
      return;
    }
    PathConfig ic = inner_cfg;
    ic.seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(i));
    ResolventOptions ro;
    ro.tag = "dynkin-inner";
    a.m.add(e.fk_weight * estimate_resolvent(p, V, e.exit_pos, mu, kappa, opts.n_inner, ic, ro).value);
  });
  const MCEstimate first = finish(acc, opts.n_outer);
  ResolventOptions rb, rv;
  rb.tag = "dynkin-B";
  rv.tag = "dynkin-V";
  const MCEstimate second = estimate_resolvent(p, B, x, mu, kappa, n, cfg, rb);
  out.lhs = combine(first, second);
  out.rhs = estimate_resolvent(p, V, x, mu, kappa, n, cfg, rv);
  out.z = z_score(out.lhs, out.rhs);
  return out;
}

IdentityCheck check_duality(const Process& p, const Domain& V, const ScalarField& f, const ScalarField& g,
                            double kappa, std::int64_t n, const PathConfig& cfg, int nodes) {
  if (p.triplet.l.cwiseAbs().maxCoeff() > 0.0)
    throw UnsupportedError("check_duality: the dual of a drifted Levy part (l != 0) is not implemented");
  if (cfg.scheme != Scheme::Euler && !p.drift.identically_zero)
    throw UnsupportedError("check_duality: drifted processes need the Euler scheme");
  const Process dual{p.triplet, negated(p.drift)};
  const DriftField drift = p.drift;
  ScalarField dual_potential = [drift, kappa](const Point& y) { return -drift.divergence(y) - kappa; };
  if (drift.identically_zero) dual_potential = nullptr;
  const quad::Cubature rule = quad::box_rule(V.bbox_lo(), V.bbox_hi(), nodes);
  auto side = [&](const Process& proc, const ScalarField& inner, const ScalarField& outer, const ScalarField& pot,
                  std::string_view tag) {
    MCEstimate acc = MCEstimate::exact(0.0);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const Point& y = rule.nodes[k];
      if (!V.contains(y)) continue;
      const double w = rule.weights[k] * outer(y);
      if (w == 0.0) continue;
      const MCEstimate r = occupation_estimate(proc, V, y, inner, kappa, pot, n, cfg, estimator_key(cfg.seed, tag, y));
      acc = combine(acc, r, w);
    }
    acc.n_samples = n;
    return acc;
  };
  IdentityCheck out;
  out.lhs = side(p, f, g, nullptr, "duality-primal");
  out.rhs = side(dual, g, f, dual_potential, "duality-dual");
  out.z = z_score(out.lhs, out.rhs);
  return out;
}

OccupationDraw draw_occupation_point(const Process& p, const Domain& V, const Point& x, double kappa,
                                     const PathConfig& cfg, Rng& rng) {
  OccupationDraw out;
  out.y = x;
  double cum = 0.0;
  PathOptions opts;
  opts.visitor = [&](const Point& y, double, double mass) {
    if (mass <= 0.0) return;
    cum += mass;
    if (rng.uniform() * cum < mass) out.y = y;
  };
  const ExitSample e = sample_exit(p, V, x, kappa, cfg, rng, opts);
  out.total_mass = cum;
  out.censored = e.mode == ExitMode::Censored;
  return out;
}

IdentityCheck check_resolvent_identity(const Process& p, const Domain& V, const ScalarField& f, const Point& x,
                                       double alpha, double beta, std::int64_t n, std::int64_t n_outer,
                                       std::int64_t n_inner, const PathConfig& cfg) {
  require_inside(V, x, "check_resolvent_identity");
  if (alpha < 0.0 || beta < alpha) throw ArgumentError("need 0 <= alpha <= beta");
  IdentityCheck out;
  ResolventOptions ra, rb;
  ra.tag = "ri-alpha";
  rb.tag = "ri-beta";
  out.lhs = estimate_resolvent(p, V, x, MeasureSpec::from_density(f), alpha, n, cfg, ra);
  const MCEstimate r_beta = estimate_resolvent(p, V, x, MeasureSpec::from_density(f), beta, n, cfg, rb);
  const StreamKey key = estimator_key(cfg.seed, "ri-outer", x, hash_double(hash_double(0, alpha), beta));
  PathConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  const auto acc = run_paths<PathAcc>(n_outer, cfg.threads, [&](std::int64_t c, std::int64_t i, PathAcc& a) {
    Rng rng(key, c, i);
    const OccupationDraw draw = draw_occupation_point(p, V, x, alpha, cfg, rng);
    if (draw.censored) ++a.censored;
    if (draw.total_mass == 0.0) {
      a.m.add(0.0);
      return;
    }
    PathConfig ic = inner_cfg;
    ic.seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(i));
    ResolventOptions ro;
    ro.tag = "ri-inner";
    a.m.add(draw.total_mass * estimate_resolvent(p, V, draw.y, MeasureSpec::from_density(f), beta, n_inner, ic, ro).value);
  });
  const MCEstimate nested = finish(acc, n_outer);
  out.rhs = combine(r_beta, nested, beta - alpha);
  out.z = z_score(out.lhs, out.rhs);
  return out;
}

IdentityCheck check_killing(const Process& p, const Domain& V, const Point& x, const ScalarField& f, double kappa,
                            std::int64_t n, const PathConfig& cfg) {
  require_inside(V, x, "check_killing");
  if (cfg.scheme != Scheme::Euler) throw UnsupportedError("check_killing needs the Euler scheme");
  IdentityCheck out;
  out.lhs = estimate_harmonic_extension(p, V, x, f, kappa, n, cfg, "killing-weight");
  const StreamKey key = estimator_key(cfg.seed, "killing-coin", x, hash_double(0, kappa));
  const auto acc = run_paths<PathAcc>(n, cfg.threads, [&](std::int64_t c, std::int64_t i, PathAcc& a) {
    Rng rng(key, c, i);
    PathOptions opts;
    opts.weight_mode = WeightMode::PerStepKilling;
    const ExitSample e = simulate_until_exit(p, V, x, kappa, cfg, rng, opts);
    if (e.mode == ExitMode::Censored) {
      ++a.censored;
      return;
    }
    a.m.add(e.mode == ExitMode::Killed ? 0.0 : f(e.exit_pos));
  });
  out.rhs = finish(acc, n);
  out.z = z_score(out.lhs, out.rhs);
  return out;
}

std::string csv_header() { return "estimator_id,params_hash,value,std_error,n,censored_fraction"; }

std::string csv_row(std::string_view estimator_id, std::uint64_t params_hash, const MCEstimate& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%016llx,%.17g,%.17g,%lld,%.17g", static_cast<unsigned long long>(params_hash),
                e.value, e.std_error, static_cast<long long>(e.n_samples), e.censored_fraction);
  return std::string(estimator_id) + buf;
}

}  // namespace levypot

#include "levypot/bocher_engine.hpp"

#include "levypot/exact_kernels.hpp"
#include "levypot/quadrature.hpp"

#include <Eigen/Dense>

namespace levypot {

namespace {

double min_distance_to(const Point& x, const std::vector<Point>& K) {
  double m = kInf;
  for (const Point& k : K) m = std::min(m, (x - k).norm());
  return m;
}

}  // namespace

void validate_problem(const ProblemSpec& spec) {
  if (!spec.u) throw ArgumentError("problem: u is required");
  const int d = spec.process.dim();
  if (spec.D.dim() != d || spec.V.dim() != d) throw ArgumentError("problem: dimension mismatch");
  validate_process(spec.process);
  if (!spec.D.compactly_contains(spec.V)) throw DomainError("problem: V must be compactly contained in D");
  for (const Point& k : spec.K) {
    if (k.size() != d) throw ArgumentError("problem: singular point dimension mismatch");
    if (!spec.V.contains(k)) throw DomainError("problem: singular points must lie in V");
  }
  if (spec.kappa1 < 0.0) throw ArgumentError("problem: kappa1 must be nonnegative");
  for (const Point& y : halton_points(spec.D.bbox_lo(), spec.D.bbox_hi(), 512)) {
    if (!spec.D.contains(y) || min_distance_to(y, spec.K) < 1e-9) continue;
    const double v = spec.u(y);
    if (!(v >= 0.0)) throw ArgumentError("problem: u must be nonnegative on D \\ K");
  }
}

std::vector<Point> decomposition_grid(const ProblemSpec& spec) {
  const double sep = 2.0 * spec.grid_cell;
  if (!spec.grid.empty()) {
    for (const Point& x : spec.grid) {
      if (!spec.V.contains(x)) throw GridError("grid point outside V");
      if (min_distance_to(x, spec.K) < sep) throw GridError("grid point closer than two cells to the singular set");
    }
    return spec.grid;
  }
  std::vector<Point> out;
  const auto candidates = halton_points(spec.V.bbox_lo(), spec.V.bbox_hi(), 200 * std::max(1, spec.grid_size));
  for (const Point& y : candidates) {
    if (static_cast<int>(out.size()) >= spec.grid_size) break;
    if (spec.V.signed_distance(y) < spec.grid_cell || min_distance_to(y, spec.K) < sep) continue;
    out.push_back(y);
  }
  if (static_cast<int>(out.size()) < spec.grid_size) throw GridError("could not place the requested grid in V \\ K");
  return out;
}

NnlsResult nnls_projected_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  NnlsResult r;
  const Eigen::Index p = X.cols();
  r.x = Eigen::VectorXd::Zero(p);
  if (p == 0) {
    r.converged = true;
    return r;
  }
  const Eigen::MatrixXd G = X.transpose() * X;
  const Eigen::VectorXd c = X.transpose() * y;
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (!(L > 0.0)) {
    r.converged = true;
    return r;
  }
  for (r.iterations = 1; r.iterations <= 1000; ++r.iterations) {
    const Eigen::VectorXd next = (r.x - (G * r.x - c) / L).cwiseMax(0.0);
    const double step = (next - r.x).norm();
    r.x = next;
    if (step <= 1e-10 * std::max(r.x.norm(), 1e-300)) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, 1000);
  // Polish on the detected support: exact least squares there if it stays feasible and optimal.
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < p; ++j)
    if (r.x[j] > 0.0) support.push_back(j);
  if (!support.empty()) {
    Eigen::MatrixXd Xs(X.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) Xs.col(static_cast<Eigen::Index>(j)) = X.col(support[j]);
    const Eigen::VectorXd as = Xs.colPivHouseholderQr().solve(y);
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < support.size(); ++j) cand[support[j]] = as[static_cast<Eigen::Index>(j)];
    const Eigen::VectorXd grad = G * cand - c;
    bool ok = cand.minCoeff() >= 0.0;
    for (Eigen::Index j = 0; j < p && ok; ++j)
      if (cand[j] == 0.0 && grad[j] < -1e-9 * std::max(1.0, c.norm())) ok = false;
    if (ok) {
      r.x = cand;
      r.converged = true;
    }
  }
  return r;
}

namespace {

MCEstimate resolvent_or_zero(const Process& p, const Domain& V, const Point& x, const MeasureSpec& mu, double kappa,
                             std::int64_t n, const PathConfig& cfg, const std::string& tag) {
  if (mu.empty()) return MCEstimate::exact(0.0, n);
  ResolventOptions ro;
  ro.tag = tag;
  return estimate_resolvent(p, V, x, mu, kappa, n, cfg, ro);
}

std::vector<ScalarField> hat_basis(const Domain& V, int per_dim) {
  std::vector<ScalarField> out;
  if (per_dim <= 0) return out;
  const int d = V.dim();
  const Point lo = V.bbox_lo(), hi = V.bbox_hi();
  const Point h = (hi - lo) / static_cast<double>(std::max(1, per_dim - 1));
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_dim;
  for (std::int64_t k = 0; k < total; ++k) {
    Point c(d);
    std::int64_t r = k;
    for (int i = 0; i < d; ++i) {
      c[i] = per_dim == 1 ? 0.5 * (lo[i] + hi[i]) : lo[i] + static_cast<double>(r % per_dim) * h[i];
      r /= per_dim;
    }
    const Point width = per_dim == 1 ? Point(hi - lo) : h;
    out.push_back([c, width](const Point& y) {
      double v = 1.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) v *= std::max(0.0, 1.0 - std::abs(y[i] - c[i]) / width[i]);
      return v;
    });
  }
  return out;
}

}  // namespace

BocherDecomposition decompose(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg) {
  validate_problem(spec);
  const Process& p = spec.process;
  BocherDecomposition out;
  out.grid_points = decomposition_grid(spec);
  const auto m = static_cast<Eigen::Index>(out.grid_points.size());
  const std::vector<ScalarField> hats = spec.mu0 ? std::vector<ScalarField>{} : hat_basis(spec.V, spec.mu0_hats_per_dim);
  const auto n_atoms = static_cast<Eigen::Index>(spec.K.size());
  const Eigen::Index cols = n_atoms + static_cast<Eigen::Index>(hats.size());

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(m, cols);
  Eigen::VectorXd y(m), var(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Point& x = out.grid_points[static_cast<std::size_t>(i)];
    const double ui = spec.u(x);
    const MCEstimate h = estimate_harmonic_extension(p, spec.V, x, spec.u, 0.0, n, cfg, "bocher-harmonic");
    const MCEstimate lp = resolvent_or_zero(p, spec.V, x, spec.lambda.plus, 0.0, n, cfg, "bocher-lambda-plus");
    const MCEstimate lm = resolvent_or_zero(p, spec.V, x, spec.lambda.minus, 0.0, n, cfg, "bocher-lambda-minus");
    const MCEstimate m0 = spec.mu0 ? resolvent_or_zero(p, spec.V, x, *spec.mu0, 0.0, n, cfg, "bocher-mu0")
                                   : MCEstimate::exact(0.0, n);
    out.u_values.push_back(ui);
    out.h_values.push_back(h);
    out.lambda_potential.push_back(lp.value - lm.value);
    y[i] = ui - h.value - m0.value - lm.value + lp.value;
    var[i] = h.std_error * h.std_error + lp.std_error * lp.std_error + lm.std_error * lm.std_error +
             m0.std_error * m0.std_error;
    for (Eigen::Index k = 0; k < n_atoms; ++k) {
      MeasureSpec atom;
      atom.atoms.push_back({spec.K[static_cast<std::size_t>(k)], 1.0});
      X(i, k) = resolvent_or_zero(p, spec.V, x, atom, 0.0, n, cfg, "bocher-green").value;
    }
    for (std::size_t j = 0; j < hats.size(); ++j) {
      X(i, n_atoms + static_cast<Eigen::Index>(j)) =
          resolvent_or_zero(p, spec.V, x, MeasureSpec::from_density(hats[j]), 0.0, n, cfg, "bocher-hat").value;
    }
    out.mu0_potential.push_back(m0.value);
  }

  const NnlsResult fit = nnls_projected_gradient(X, y);
  Eigen::VectorXd se = Eigen::VectorXd::Zero(cols), unconstrained = Eigen::VectorXd::Zero(cols);
  if (cols > 0) {
    const Eigen::MatrixXd G = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd C = lu.inverse();
      const Eigen::MatrixXd sandwich = C * X.transpose() * var.asDiagonal() * X * C;
      se = sandwich.diagonal().cwiseMax(0.0).cwiseSqrt();
      unconstrained = C * (X.transpose() * y);
    }
  }
  for (Eigen::Index k = 0; k < n_atoms; ++k) {
    AtomCoefficient a{spec.K[static_cast<std::size_t>(k)], fit.x[k], se[k], unconstrained[k]};
    if (a.unconstrained < -3.0 * a.std_error && a.unconstrained < 0.0) out.inconsistent = true;
    out.atom_coeffs.push_back(a);
  }
  for (std::size_t j = 0; j < hats.size(); ++j) out.density_coeffs.push_back(fit.x[n_atoms + static_cast<Eigen::Index>(j)]);

  const Eigen::VectorXd fitted = X * fit.x;
  double rss = 0.0, u2 = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double atoms_part = 0.0;
    for (Eigen::Index k = 0; k < n_atoms; ++k) atoms_part += X(i, k) * fit.x[k];
    out.sigma_potential.push_back(atoms_part);
    if (!spec.mu0) out.mu0_potential[static_cast<std::size_t>(i)] = fitted[i] - atoms_part;
    const double r = y[i] - fitted[i];
    rss += r * r;
    u2 += out.u_values[static_cast<std::size_t>(i)] * out.u_values[static_cast<std::size_t>(i)];
  }
  const double md = static_cast<double>(std::max<Eigen::Index>(m, 1));
  out.residual_rms = std::sqrt(rss / md);
  out.residual_floor = std::sqrt(var.sum() / md);
  out.central_scale = std::sqrt(u2 / md);
  return out;
}

RepresentationCheck representation_check_kappa1(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg) {
  validate_problem(spec);
  if (!spec.mu0) throw ArgumentError("representation check needs mu0");
  Kappa0Options ko;
  ko.grid = default_kappa0_grid(spec.D, 2000);
  ko.allow_finite_differences = true;
  const double k0 = spec.process.drift.identically_zero ? 0.0 : kappa0(spec.process.drift, ko);
  if (!(spec.kappa1 > k0)) throw ArgumentError("representation check needs kappa1 > kappa0");
  const Process& p = spec.process;
  const double k1 = spec.kappa1;
  RepresentationCheck out;
  out.grid_points = decomposition_grid(spec);
  for (const Point& x : out.grid_points) {
    out.lhs.push_back(MCEstimate::exact(spec.u(x), n));
    MCEstimate rhs = estimate_harmonic_extension(p, spec.V, x, spec.u, k1, n, cfg, "repr-harmonic");
    rhs = combine(rhs, resolvent_or_zero(p, spec.V, x, *spec.mu0, k1, n, cfg, "repr-mu0"));
    rhs = combine(rhs, resolvent_or_zero(p, spec.V, x, spec.sigma, k1, n, cfg, "repr-sigma"));
    rhs = combine(rhs, resolvent_or_zero(p, spec.V, x, spec.lambda.plus, k1, n, cfg, "repr-lambda-plus"), -1.0);
    rhs = combine(rhs, resolvent_or_zero(p, spec.V, x, spec.lambda.minus, k1, n, cfg, "repr-lambda-minus"));
    rhs = combine(rhs, resolvent_or_zero(p, spec.V, x, MeasureSpec::from_density(spec.u), k1, n, cfg, "repr-u"), k1);
    rhs.n_samples = n;
    out.rhs.push_back(rhs);
    out.max_z_score = std::max(out.max_z_score, z_score(out.lhs.back(), rhs));
  }
  return out;
}

std::vector<Point> exterior_sample(const Domain& D, const Domain& V, int n) {
  std::vector<Point> out;
  const auto pts = halton_points(D.bbox_lo(), D.bbox_hi(), n);
  for (const Point& y : pts)
    if (D.contains(y) && !V.contains(y)) out.push_back(y);
  const double dv = 1e-3 * V.length_scale(), dd = 1e-3 * D.length_scale();
  const int shell = std::max(1, n / 10);
  for (const Point& y : halton_points(D.bbox_lo(), D.bbox_hi(), shell)) {
    const Point a = V.project(y);
    const Point near_v = a + dv * V.outward_normal(a);
    if (D.contains(near_v) && !V.contains(near_v)) out.push_back(near_v);
    const Point b = D.project(y);
    const Point near_d = b - dd * D.outward_normal(b);
    if (D.contains(near_d) && !V.contains(near_d)) out.push_back(near_d);
  }
  return out;
}

MaxPrincipleCheck verify_max_principle(const ProblemSpec& spec, std::int64_t n, const PathConfig& cfg,
                                       int exterior_samples) {
  if (!spec.u) throw ArgumentError("problem: u is required");
  const std::vector<Point> ext = exterior_sample(spec.D, spec.V, exterior_samples);
  if (ext.empty()) throw ArgumentError("max principle: empty sample of D \\ V");
  validate_problem(spec);
  MaxPrincipleCheck out;
  out.exterior_samples = static_cast<std::int64_t>(ext.size());
  out.inf_exterior = kInf;
  for (const Point& y : ext) out.inf_exterior = std::min(out.inf_exterior, spec.u(y));
  out.grid_points = decomposition_grid(spec);
  out.min_margin = kInf;
  out.min_margin_z = kInf;
  const bool local = !has_jumps(spec.process.triplet.jump);
  for (const Point& x : out.grid_points) {
    MCEstimate margin = MCEstimate::exact(spec.u(x), n);
    margin = combine(margin, resolvent_or_zero(spec.process, spec.V, x, spec.lambda.plus, 0.0, n, cfg, "maxprin-lambda"));
    const MCEstimate w = local ? MCEstimate::exact(1.0, n) : estimate_wv(spec.process, spec.V, spec.D, x, n, cfg).direct;
    margin = combine(margin, w, -out.inf_exterior);
    margin.n_samples = n;
    out.margins.push_back(margin);
    out.min_margin = std::min(out.min_margin, margin.value);
    const double z = margin.std_error > 0.0 ? margin.value / margin.std_error : (margin.value >= 0.0 ? kInf : -kInf);
    out.min_margin_z = std::min(out.min_margin_z, z);
  }
  return out;
}

double singularity_strength(const ScalarField& u, const Point& x0, const std::function<double(double)>& g,
                            const std::vector<double>& radii) {
  if (radii.size() < 4) throw ArgumentError("singularity_strength: need at least four radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ArgumentError("singularity_strength: radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw ArgumentError("singularity_strength: radii must decrease strictly");
  }
  // q(r) = a + c t with t = 1/g(r): a bounded part contributes c = its value at x0.
  const auto m = static_cast<Eigen::Index>(radii.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd q(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = radii[static_cast<std::size_t>(i)];
    const double gr = g(r);
    if (!(gr > 0.0) || !std::isfinite(gr)) throw ArgumentError("singularity_strength: kernel profile must be positive");
    A(i, 0) = 1.0;
    A(i, 1) = 1.0 / gr;
    q[i] = quad::sphere_average(u, x0, r, 32) / gr;
  }
  return A.colPivHouseholderQr().solve(q)[0];
}

double singularity_strength(const ScalarField& u, const Point& x0, int d, double s, const std::vector<double>& radii) {
  const double c = riesz_constant(d, s);
  return singularity_strength(u, x0, [c, d, s](double r) { return c * std::pow(r, 2.0 * s - d); }, radii);
}

}  // namespace levypot

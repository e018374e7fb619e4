#include "levypot/levy_models.hpp"

#include "levypot/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>

namespace levypot {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_s(double s) {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("stability parameter must lie in (0, 1)");
}

// Signed integral of |t|^{-1-2s} over [a, b] with 0 < a <= b (b may be inf).
double power_tail(double a, double b, double s) {
  const double fa = std::pow(a, -2.0 * s);
  const double fb = std::isinf(b) ? 0.0 : std::pow(b, -2.0 * s);
  return (fa - fb) / (2.0 * s);
}

// nu-mass of [lo, hi] on a line, excluding (-r_min, r_min), for density c|t|^{-1-2s}.
double line_mass(double lo, double hi, double r_min, double s, double c) {
  double m = 0.0;
  // Positive part.
  const double p0 = std::max(lo, r_min), p1 = hi;
  if (p1 > p0) m += power_tail(p0, p1, s);
  // Negative part, reflected.
  const double n0 = std::max(-hi, r_min), n1 = -lo;
  if (n1 > n0) m += power_tail(n0, n1, s);
  return c * m;
}

Matrix matrix_sqrt_psd(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (Q + Q.transpose())));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

bool has_jumps(const JumpSpec& j) { return !std::holds_alternative<NoJump>(j); }

std::string jump_name(const JumpSpec& j) {
  return std::visit(overloaded{[](const NoJump&) { return std::string("none"); },
                               [](const IsotropicStable&) { return std::string("isotropic_stable"); },
                               [](const CylindricalStable&) { return std::string("cylindrical_stable"); },
                               [](const MixedLaplacianStable&) { return std::string("mixed_laplacian_stable"); }},
                    j);
}

void validate_jump(const JumpSpec& j, int d) {
  std::visit(overloaded{[](const NoJump&) {}, [](const IsotropicStable& v) { check_s(v.s); },
                        [d](const CylindricalStable& v) {
                          if (static_cast<int>(v.s.size()) != d)
                            throw ConfigError("cylindrical stable needs one parameter per axis");
                          for (double s : v.s) check_s(s);
                        },
                        [](const MixedLaplacianStable& v) { check_s(v.s); }},
             j);
}

void validate_triplet(const LevyTriplet& t) {
  const int d = t.dim();
  if (d < 1) throw ConfigError("triplet dimension must be >= 1");
  require_dim(d);
  if (t.Q.rows() != d || t.Q.cols() != d) throw ConfigError("Q must be d x d");
  if ((t.Q - t.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (t.Q + t.Q.transpose())),
                                                   Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) throw ConfigError("Q must be positive semidefinite");
  if (t.c != 0.0) throw ConfigError("killing constant c must be 0");
  validate_jump(t.jump, d);
}

LevyTriplet brownian(int d, double variance) {
  require_dim(d);
  return {Point::Zero(d), Matrix::Identity(d, d) * variance, NoJump{}, 0.0};
}

LevyTriplet isotropic_stable(int d, double s) {
  require_dim(d);
  check_s(s);
  return {Point::Zero(d), Matrix::Zero(d, d), IsotropicStable{s}, 0.0};
}

LevyTriplet cylindrical_stable(const std::vector<double>& s) {
  const int d = static_cast<int>(s.size());
  require_dim(d);
  for (double v : s) check_s(v);
  return {Point::Zero(d), Matrix::Zero(d, d), CylindricalStable{s}, 0.0};
}

LevyTriplet mixed_laplacian_stable(int d, double s) {
  require_dim(d);
  check_s(s);
  return {Point::Zero(d), Matrix::Identity(d, d) * 2.0, MixedLaplacianStable{s}, 0.0};
}

double stable_levy_constant(int d, double s) {
  return std::pow(4.0, s) * std::tgamma(0.5 * d + s) / (std::pow(kPi, 0.5 * d) * std::abs(std::tgamma(-s)));
}

std::complex<double> symbol_eval(const LevyTriplet& t, const Point& xi) {
  const double re_gauss = 0.5 * xi.dot(t.Q * xi);
  const double re_jump = std::visit(overloaded{[](const NoJump&) { return 0.0; },
                                               [&](const IsotropicStable& v) { return std::pow(xi.norm(), 2.0 * v.s); },
                                               [&](const CylindricalStable& v) {
                                                 double acc = 0.0;
                                                 for (std::size_t i = 0; i < v.s.size(); ++i)
                                                   acc += std::pow(std::abs(xi[i]), 2.0 * v.s[i]);
                                                 return acc;
                                               },
                                               [&](const MixedLaplacianStable& v) {
                                                 return std::pow(xi.norm(), 2.0 * v.s);
                                               }},
                                    t.jump);
  return {re_gauss + re_jump, -t.l.dot(xi)};
}

double kappa0(const DriftField& drift, const Kappa0Options& opts) {
  if (opts.grid.empty()) throw ConfigError("kappa0: no evaluation grid supplied");
  if (!drift.div_b && !opts.allow_finite_differences)
    throw ConfigError("kappa0: drift has no analytic divergence and finite differences were not requested");
  double sup = 0.0;
  for (const Point& x : opts.grid) sup = std::max(sup, std::abs(drift.divergence(x)));
  return sup;
}

std::vector<Point> default_kappa0_grid(const Domain& D, int n) {
  std::vector<Point> out;
  for (const Point& p : halton_points(D.bbox_lo(), D.bbox_hi(), 4 * n)) {
    if (D.contains(p)) out.push_back(p);
    if (static_cast<int>(out.size()) == n) break;
  }
  return out;
}

double bg_index(const JumpSpec& jump, int d) {
  validate_jump(jump, d);
  return std::visit(overloaded{[](const NoJump&) -> double {
                                 throw UnsupportedError("Blumenthal-Getoor index undefined without jumps");
                               },
                               [](const IsotropicStable& v) { return 2.0 * v.s; },
                               [](const CylindricalStable& v) {
                                 return 2.0 * *std::max_element(v.s.begin(), v.s.end());
                               },
                               [](const MixedLaplacianStable& v) { return 2.0 * v.s; }},
                    jump);
}

BgScan bg_scan(const JumpSpec& jump, int d, double resolution) {
  validate_jump(jump, d);
  // nu restricted to B_1 in the variable t = -log|x|: sum_k w_k exp(beta_k t) dt;
  // |x|^alpha contributes exp(-alpha t).
  std::vector<std::pair<double, double>> terms;  // (weight, beta)
  std::visit(overloaded{[](const NoJump&) { throw UnsupportedError("bg_scan: no jump measure"); },
                        [&](const IsotropicStable& v) {
                          terms.emplace_back(stable_levy_constant(d, v.s) * unit_sphere_area(d), 2.0 * v.s);
                        },
                        [&](const CylindricalStable& v) {
                          for (double s : v.s) terms.emplace_back(2.0 * stable_levy_constant(1, s), 2.0 * s);
                        },
                        [&](const MixedLaplacianStable& v) {
                          terms.emplace_back(stable_levy_constant(d, v.s) * unit_sphere_area(d), 2.0 * v.s);
                        }},
             jump);
  BgScan scan;
  scan.resolution = resolution;
  const double T = 5.0 / resolution;
  constexpr double kClamp = 600.0;
  bool prev_divergent = true;
  double last_div = 0.0;
  bool found = false;
  for (double alpha = 0.5 * resolution; alpha < 2.0 + resolution; alpha += resolution) {
    auto density = [&](double t) {
      double acc = 0.0;
      for (auto [w, beta] : terms) acc += w * std::exp(std::min(kClamp, (beta - alpha) * t));
      return acc;
    };
    const double head = quad::integrate(density, 0.0, T, 1e-8);
    const double tail = quad::integrate(density, T, 2.0 * T, 1e-8);
    const bool converges = tail < head;
    scan.table.emplace_back(alpha, converges);
    if (!converges) last_div = alpha;
    if (converges && prev_divergent && !found) {
      scan.threshold = alpha > resolution ? 0.5 * (last_div + alpha) : 0.0;
      found = true;
    }
    prev_divergent = !converges;
  }
  if (!found) scan.threshold = 2.0;
  return scan;
}

namespace {

using JetMatrix = std::vector<std::vector<Jet>>;

JetMatrix hormander_jets(const DriftField& drift, const Matrix& Q, const Point& x, int n) {
  const int d = drift.dim;
  const int order = 2 * n + 1;
  std::vector<Jet> vars;
  for (int i = 0; i < d; ++i) vars.push_back(Jet::variable(d, order, i, x[i]));
  const std::vector<Jet> b = drift.b_jet(vars);
  std::vector<std::vector<Jet>> db(d, std::vector<Jet>(d));
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) db[i][k] = b[i].partial(k);

  JetMatrix B(d, std::vector<Jet>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B[i][j] = Jet::constant(d, order - 1, i == j ? 1.0 : 0.0);

  for (int step = 1; step <= n; ++step) {
    JetMatrix next(d, std::vector<Jet>(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const Jet& e = B[i][j];
        Jet acc = Jet::constant(d, std::max(e.order() - 2, 0), 0.0);
        for (int k = 0; k < d; ++k) {
          const Jet dk = e.partial(k);
          acc += b[k] * dk;
          acc -= db[i][k] * B[k][j];
          for (int l = 0; l < d; ++l)
            if (Q(k, l) != 0.0) acc += dk.partial(l) * (0.5 * Q(k, l));
        }
        next[i][j] = acc;
      }
    B = std::move(next);
  }
  return B;
}

Matrix hormander_fd(const DriftField& drift, const Matrix& Q, const Point& x, int n) {
  const int d = drift.dim;
  if (n == 0) return Matrix::Identity(d, d);
  const double h = 1e-5 * (1.0 + x.norm()) * std::pow(30.0, n - 1);
  const Matrix B0 = hormander_fd(drift, Q, x, n - 1);
  const Point bx = drift(x);
  const Matrix J = drift.jacobian(x);
  Matrix out = -J * B0;
  for (int k = 0; k < d; ++k) {
    Point xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Matrix Bp = hormander_fd(drift, Q, xp, n - 1), Bm = hormander_fd(drift, Q, xm, n - 1);
    out += bx[k] * (Bp - Bm) / (2.0 * h);
    for (int l = 0; l < d; ++l) {
      if (Q(k, l) == 0.0) continue;
      Matrix second;
      if (k == l) {
        second = (Bp - 2.0 * B0 + Bm) / (h * h);
      } else {
        Point pp = x, pm = x, mp = x, mm = x;
        pp[k] += h, pp[l] += h;
        pm[k] += h, pm[l] -= h;
        mp[k] -= h, mp[l] += h;
        mm[k] -= h, mm[l] -= h;
        second = (hormander_fd(drift, Q, pp, n - 1) - hormander_fd(drift, Q, pm, n - 1) -
                  hormander_fd(drift, Q, mp, n - 1) + hormander_fd(drift, Q, mm, n - 1)) /
                 (4.0 * h * h);
      }
      out += 0.5 * Q(k, l) * second;
    }
  }
  return out;
}

}  // namespace

Matrix hormander_matrix(const DriftField& drift, const Matrix& Q, const Point& x, int n) {
  if (n < 0) throw ArgumentError("hormander_matrix: n must be >= 0");
  const int d = drift.dim;
  if (!drift.b_jet) return hormander_fd(drift, Q, x, n);
  const JetMatrix B = hormander_jets(drift, Q, x, n);
  Matrix M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = B[i][j].value();
  return M;
}

HormanderResult hormander_rank_check(const DriftField& drift, const Matrix& Q, const Matrix& C, const Point& x,
                                     int n_max) {
  if (n_max < 0) throw ArgumentError("hormander_rank_check: n_max must be >= 0");
  const int d = drift.dim;
  if (Q.rows() != d || C.rows() != d) throw ArgumentError("hormander_rank_check: matrix dimension mismatch");
  const Matrix sqrtQ = matrix_sqrt_psd(Q);
  std::vector<Matrix> blocks_q, blocks_c;
  HormanderResult res;
  for (int n = 0; n <= n_max; ++n) {
    const Matrix Bn = hormander_matrix(drift, Q, x, n);
    blocks_q.push_back(Bn * sqrtQ);
    blocks_c.push_back(Bn * C);
    Eigen::MatrixXd stacked(d, static_cast<Eigen::Index>(blocks_q.size() * d + blocks_c.size() * C.cols()));
    Eigen::Index col = 0;
    for (const Matrix& m : blocks_q) {
      stacked.middleCols(col, d) = m;
      col += d;
    }
    for (const Matrix& m : blocks_c) {
      stacked.middleCols(col, m.cols()) = m;
      col += m.cols();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0)
      for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > 1e-8 * sv(0)) ++rank;
    res.rank_achieved = rank;
    res.n_used = n;
    if (rank == d) {
      res.satisfied = true;
      return res;
    }
  }
  return res;
}

double sphere_fraction_in_ball(int d, double rho, double a_norm, double r) {
  if (rho <= 0.0) return a_norm < r ? 1.0 : 0.0;
  if (d == 1) {
    double inside = 0.0;
    if (std::abs(rho - a_norm) < r) inside += 0.5;
    if (rho + a_norm < r) inside += 0.5;
    return inside;
  }
  if (a_norm == 0.0) return rho < r ? 1.0 : 0.0;
  const double t0 = (rho * rho + a_norm * a_norm - r * r) / (2.0 * rho * a_norm);
  if (t0 >= 1.0) return 0.0;
  if (t0 <= -1.0) return 1.0;
  const double cap = 0.5 * boost::math::ibeta(0.5 * (d - 1), 0.5, 1.0 - t0 * t0);
  return t0 >= 0.0 ? cap : 1.0 - cap;
}

namespace {

// nu-mass of {z in closed ball B(a, r) : |z| >= r_min} for the isotropic density.
double iso_ball_mass(int d, double s, const Point& a, double r, double r_min, QuadratureScheme scheme) {
  const double c = stable_levy_constant(d, s);
  const double A = a.norm();
  if (scheme == QuadratureScheme::SphericalShells) {
    const double lo = std::max(r_min, A - r), hi = A + r;
    if (hi <= lo) return 0.0;
    const double S = unit_sphere_area(d);
    auto f = [&](double rho) { return c * S * std::pow(rho, -1.0 - 2.0 * s) * sphere_fraction_in_ball(d, rho, A, r); };
    // Kink where the sphere stops being fully inside.
    const double kink = r - A;
    if (kink > lo && kink < hi) return quad::integrate(f, lo, kink, 1e-11) + quad::integrate(f, kink, hi, 1e-11);
    return quad::integrate(f, lo, hi, 1e-11);
  }
  // Polar coordinates about the ball centre, axis along a.
  if (d == 1) {
    const double lo = a[0] - r, hi = a[0] + r;
    double m = 0.0;
    auto f = [&](double t) { return c * std::pow(std::abs(t), -1.0 - 2.0 * s); };
    if (hi > r_min) m += quad::integrate(f, std::max(lo, r_min), hi, 1e-11);
    if (lo < -r_min) m += quad::integrate(f, lo, std::min(hi, -r_min), 1e-11);
    return m;
  }
  const double S_sub = unit_sphere_area(d - 1);
  // For fixed rho the admissible polar angles are phi <= phi*(rho), where
  // cos phi* = (r_min^2 - A^2 - rho^2) / (2 rho A).
  auto shell = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    double phi_max = kPi;
    if (A > 0.0) {
      const double c0 = (r_min * r_min - A * A - rho * rho) / (2.0 * rho * A);
      if (c0 >= 1.0) return 0.0;
      if (c0 > -1.0) phi_max = std::acos(c0);
    } else if (rho < r_min) {
      return 0.0;
    }
    auto g = [&](double phi) {
      const double z2 = A * A + rho * rho + 2.0 * rho * A * std::cos(phi);
      return S_sub * std::pow(std::sin(phi), d - 2) * c * std::pow(z2, -0.5 * (d + 2.0 * s));
    };
    return std::pow(rho, d - 1) * quad::integrate(g, 0.0, phi_max, 1e-14, nullptr, 1e-18);
  };
  std::vector<double> cuts = {0.0, r};
  for (double k : {A - r_min, r_min - A, A + r_min})
    if (k > 0.0 && k < r) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) acc += quad::integrate(shell, cuts[i], cuts[i + 1], 1e-9, nullptr, 1e-15);
  return acc;
}

double cyl_ball_mass(const std::vector<double>& svec, const Point& a, double r, double r_min, QuadratureScheme scheme) {
  double m = 0.0;
  const double A2 = a.squaredNorm();
  for (std::size_t i = 0; i < svec.size(); ++i) {
    const double h2 = r * r - A2 + a[i] * a[i];
    if (h2 <= 0.0) continue;
    const double h = std::sqrt(h2);
    const double c = stable_levy_constant(1, svec[i]);
    const double lo = a[i] - h, hi = a[i] + h;
    if (scheme == QuadratureScheme::SphericalShells) {
      m += line_mass(lo, hi, r_min, svec[i], c);
    } else {
      auto f = [&](double t) { return c * std::pow(std::abs(t), -1.0 - 2.0 * svec[i]); };
      if (hi > r_min) m += quad::integrate(f, std::max(lo, r_min), hi, 1e-11);
      if (lo < -r_min) m += quad::integrate(f, lo, std::min(hi, -r_min), 1e-11);
    }
  }
  return m;
}

double ball_mass(const JumpSpec& jump, int d, const Point& a, double r, double r_min, QuadratureScheme scheme) {
  return std::visit(overloaded{[](const NoJump&) -> double { throw UnsupportedError("no jump measure"); },
                               [&](const IsotropicStable& v) { return iso_ball_mass(d, v.s, a, r, r_min, scheme); },
                               [&](const CylindricalStable& v) { return cyl_ball_mass(v.s, a, r, r_min, scheme); },
                               [&](const MixedLaplacianStable& v) {
                                 return iso_ball_mass(d, v.s, a, r, r_min, scheme);
                               }},
                    jump);
}

}  // namespace

double tail_weight_rho(const CompactBall& F, const Domain& V, const Point& x, const JumpSpec& jump,
                       QuadratureScheme scheme) {
  if (!has_jumps(jump)) throw UnsupportedError("tail_weight_rho: nu = 0 carries no tail weight");
  const int d = V.dim();
  validate_jump(jump, d);
  const double dist = V.signed_distance(F.center) - F.radius;
  if (!(dist > 0.0)) throw DomainError("tail_weight_rho: F is not contained in V");
  const double r_F = std::min(2.0 * dist, 1.0);
  const Point a1 = F.center - x;  // F - x
  const Point a2 = x - F.center;  // x - F
  return ball_mass(jump, d, a1, F.radius, r_F, scheme) + ball_mass(jump, d, a2, F.radius, r_F, scheme);
}

double exterior_jump_mass(const JumpSpec& jump, const Domain& D, const Point& y) {
  if (!has_jumps(jump)) return 0.0;
  if (!D.contains(y)) throw DomainError("exterior_jump_mass: y must lie in D");
  const int d = D.dim();
  const Ball* ball = D.as_ball();
  const auto iso = [&](double s) -> double {
    if (!ball) return exterior_jump_integral(jump, D, y, [](const Point&) { return 1.0; }, 128, 24);
    const double c = stable_levy_constant(d, s), S = unit_sphere_area(d);
    const double A = (ball->center - y).norm(), R = ball->radius;
    const double lo = R - A, hi = R + A;
    auto f = [&](double rho) {
      return c * S * std::pow(rho, -1.0 - 2.0 * s) * (1.0 - sphere_fraction_in_ball(d, rho, A, R));
    };
    const double tail = c * S * std::pow(hi, -2.0 * s) / (2.0 * s);
    return (hi > lo ? quad::integrate(f, lo, hi, 1e-11) : 0.0) + tail;
  };
  return std::visit(overloaded{[](const NoJump&) { return 0.0; }, [&](const IsotropicStable& v) { return iso(v.s); },
                               [&](const CylindricalStable& v) {
                                 double m = 0.0;
                                 for (int i = 0; i < d; ++i) {
                                   const double c = stable_levy_constant(1, v.s[i]);
                                   for (double sign : {1.0, -1.0}) {
                                     Point dir = Point::Zero(d);
                                     dir[i] = sign;
                                     for (auto [a, b] : D.exterior_intervals(y, dir))
                                       if (a > 0.0) m += c * power_tail(a, b, v.s[i]);
                                   }
                                 }
                                 return m;
                               },
                               [&](const MixedLaplacianStable& v) { return iso(v.s); }},
                    jump);
}

double exterior_jump_integral(const JumpSpec& jump, const Domain& D, const Point& y,
                              const std::function<double(const Point&)>& u, int angular, int radial) {
  if (!has_jumps(jump)) return 0.0;
  if (!D.contains(y)) throw DomainError("exterior_jump_integral: y must lie in D");
  const int d = D.dim();
  const quad::Rule1D ref = quad::gauss_legendre(radial, 0.0, 1.0);
  // int_a^b u(y + rho dir) rho^{-1-2s} d rho = (1/2s) int_{b^{-2s}}^{a^{-2s}} u(rho(w)) dw.
  auto ray = [&](const Point& dir, double s) {
    double acc = 0.0;
    for (auto [a, b] : D.exterior_intervals(y, dir)) {
      const double w_hi = std::pow(a, -2.0 * s);
      const double w_lo = std::isinf(b) ? 0.0 : std::pow(b, -2.0 * s);
      double part = 0.0;
      for (std::size_t k = 0; k < ref.nodes.size(); ++k) {
        const double w = w_lo + (w_hi - w_lo) * ref.nodes[k];
        const double rho = std::pow(w, -1.0 / (2.0 * s));
        part += ref.weights[k] * u(y + rho * dir);
      }
      acc += part * (w_hi - w_lo) / (2.0 * s);
    }
    return acc;
  };
  const auto iso = [&](double s) {
    const double c = stable_levy_constant(d, s);
    const quad::SphereRule rule = quad::sphere_rule(d, angular);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.directions.size(); ++k) acc += rule.weights[k] * ray(rule.directions[k], s);
    return c * acc;
  };
  return std::visit(overloaded{[](const NoJump&) { return 0.0; }, [&](const IsotropicStable& v) { return iso(v.s); },
                               [&](const CylindricalStable& v) {
                                 double m = 0.0;
                                 for (int i = 0; i < d; ++i)
                                   for (double sign : {1.0, -1.0}) {
                                     Point dir = Point::Zero(d);
                                     dir[i] = sign;
                                     m += stable_levy_constant(1, v.s[i]) * ray(dir, v.s[i]);
                                   }
                                 return m;
                               },
                               [&](const MixedLaplacianStable& v) { return iso(v.s); }},
                    jump);
}

}  // namespace levypot

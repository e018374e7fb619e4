#include "levypot/domain.hpp"

#include "levypot/quadrature.hpp"

#include <algorithm>
#include <array>

namespace levypot {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Roots t of |y + t dir - c|^2 = r^2 (dir is a unit vector); false if none.
bool sphere_hits(const Point& y, const Point& dir, const Point& c, double r, double& t0, double& t1) {
  const Point w = y - c;
  const double b = w.dot(dir);
  const double disc = b * b - (w.squaredNorm() - r * r);
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  t0 = -b - sq;
  t1 = -b + sq;
  return true;
}

// Gauss-Legendre nodes on [-1, 1] for the tube volume slice integral.
const std::pair<std::vector<double>, std::vector<double>>& tube_rule() {
  static const auto rule = [] {
    const quad::Rule1D r = quad::gauss_legendre(32);
    return std::make_pair(r.nodes, r.weights);
  }();
  return rule;
}
}  // namespace

Domain::Domain(Shape shape, std::vector<Point> singular) : shape_(std::move(shape)), singular_(std::move(singular)) {
  std::visit(overloaded{[&](const Ball& b) {
                          if (!(b.radius > 0.0)) throw ConfigError("ball radius must be positive");
                          dim_ = static_cast<int>(b.center.size());
                        },
                        [&](const Box& b) {
                          if (b.lo.size() != b.hi.size()) throw ConfigError("box corners differ in dimension");
                          if (((b.hi - b.lo).array() <= 0.0).any()) throw ConfigError("box must have lo < hi");
                          dim_ = static_cast<int>(b.lo.size());
                        },
                        [&](const Annulus& a) {
                          if (!(a.r_in > 0.0 && a.r_in < a.r_out)) throw ConfigError("annulus requires 0 < r_in < r_out");
                          dim_ = static_cast<int>(a.center.size());
                        },
                        [&](const TubeComplement& t) {
                          dim_ = static_cast<int>(t.center.size());
                          if (t.codim < 1 || t.codim > dim_) throw ConfigError("tube codimension must be in [1, d]");
                          if (!(t.eps > 0.0 && t.eps < t.radius)) throw ConfigError("tube requires 0 < eps < radius");
                        }},
             shape_);
  require_dim(dim_);
  for (const Point& k : singular_) {
    if (k.size() != dim_) throw ConfigError("singular point dimension mismatch");
    if (!contains(k)) throw ConfigError("singular set must lie in the interior of the domain");
  }
}

double Domain::signed_distance(const Point& x) const {
  return std::visit(overloaded{[&](const Ball& b) { return b.radius - (x - b.center).norm(); },
                               [&](const Box& b) {
                                 const Point lo = x - b.lo, hi = b.hi - x;
                                 const double inside = std::min(lo.minCoeff(), hi.minCoeff());
                                 if (inside >= 0.0) return inside;
                                 Point excess = (-lo).cwiseMax(-hi).cwiseMax(0.0);
                                 return -excess.norm();
                               },
                               [&](const Annulus& a) {
                                 const double r = (x - a.center).norm();
                                 return std::min(r - a.r_in, a.r_out - r);
                               },
                               [&](const TubeComplement& t) {
                                 const Point w = x - t.center;
                                 return std::min(t.radius - w.norm(), w.head(t.codim).norm() - t.eps);
                               }},
                    shape_);
}

Point Domain::project(const Point& x) const {
  return std::visit(overloaded{[&](const Ball& b) -> Point {
                                 Point v = x - b.center;
                                 const double n = v.norm();
                                 if (n == 0.0) {
                                   v.setZero();
                                   v[0] = 1.0;
                                   return b.center + b.radius * v;
                                 }
                                 return b.center + (b.radius / n) * v;
                               },
                               [&](const Box& b) -> Point {
                                 Point p = x.cwiseMax(b.lo).cwiseMin(b.hi);
                                 if (contains(x)) {
                                   // Snap the nearest face.
                                   int best = 0;
                                   bool upper = false;
                                   double dmin = kInf;
                                   for (int k = 0; k < dim_; ++k) {
                                     if (x[k] - b.lo[k] < dmin) {
                                       dmin = x[k] - b.lo[k];
                                       best = k;
                                       upper = false;
                                     }
                                     if (b.hi[k] - x[k] < dmin) {
                                       dmin = b.hi[k] - x[k];
                                       best = k;
                                       upper = true;
                                     }
                                   }
                                   p[best] = upper ? b.hi[best] : b.lo[best];
                                 }
                                 return p;
                               },
                               [&](const Annulus& a) -> Point {
                                 Point v = x - a.center;
                                 double n = v.norm();
                                 if (n == 0.0) {
                                   v.setZero();
                                   v[0] = 1.0;
                                   n = 1.0;
                                 }
                                 const double target = (n - a.r_in < a.r_out - n) ? a.r_in : a.r_out;
                                 return a.center + (target / n) * v;
                               },
                               [&](const TubeComplement& t) -> Point {
                                 Point w = x - t.center;
                                 const double n = w.norm(), q = w.head(t.codim).norm();
                                 if (t.radius - n <= std::abs(q - t.eps)) {
                                   if (n == 0.0) w[0] = 1.0;
                                   return t.center + (t.radius / w.norm()) * w;
                                 }
                                 if (q == 0.0) {
                                   w[0] = t.eps;
                                 } else {
                                   w.head(t.codim) *= t.eps / q;
                                 }
                                 return t.center + w;
                               }},
                    shape_);
}

Point Domain::outward_normal(const Point& x) const {
  const Point p = project(x);
  return std::visit(overloaded{[&](const Ball& b) -> Point { return (p - b.center).normalized(); },
                               [&](const Box& b) -> Point {
                                 Point n = Point::Zero(dim_);
                                 int best = 0;
                                 double dmin = kInf, sign = 1.0;
                                 for (int k = 0; k < dim_; ++k) {
                                   if (std::abs(p[k] - b.lo[k]) < dmin) {
                                     dmin = std::abs(p[k] - b.lo[k]);
                                     best = k;
                                     sign = -1.0;
                                   }
                                   if (std::abs(b.hi[k] - p[k]) < dmin) {
                                     dmin = std::abs(b.hi[k] - p[k]);
                                     best = k;
                                     sign = 1.0;
                                   }
                                 }
                                 n[best] = sign;
                                 return n;
                               },
                               [&](const Annulus& a) -> Point {
                                 const Point v = (p - a.center).normalized();
                                 return (std::abs((p - a.center).norm() - a.r_in) < std::abs((p - a.center).norm() - a.r_out))
                                            ? Point(-v)
                                            : v;
                               },
                               [&](const TubeComplement& t) -> Point {
                                 const Point w = p - t.center;
                                 if (std::abs(w.norm() - t.radius) < std::abs(w.head(t.codim).norm() - t.eps))
                                   return w.normalized();
                                 Point n = Point::Zero(dim_);
                                 n.head(t.codim) = -w.head(t.codim).normalized();
                                 return n;
                               }},
                    shape_);
}

double Domain::diameter() const {
  return std::visit(overloaded{[](const Ball& b) { return 2.0 * b.radius; },
                               [](const Box& b) { return (b.hi - b.lo).norm(); },
                               [](const Annulus& a) { return 2.0 * a.r_out; },
                               [](const TubeComplement& t) { return 2.0 * t.radius; }},
                    shape_);
}

double Domain::volume() const {
  return std::visit(overloaded{[&](const Ball& b) { return unit_ball_volume(dim_) * std::pow(b.radius, dim_); },
                               [](const Box& b) { return (b.hi - b.lo).prod(); },
                               [&](const Annulus& a) {
                                 return unit_ball_volume(dim_) * (std::pow(a.r_out, dim_) - std::pow(a.r_in, dim_));
                               },
                               [&](const TubeComplement& t) {
                                 // Ball minus the tube slice: |Pi w| = rho < eps carries a (d - k)-ball of radius sqrt(R^2 - rho^2).
                                 const int k = t.codim, m = dim_ - k;
                                 const auto& gl = tube_rule();
                                 double removed = 0.0;
                                 for (std::size_t i = 0; i < gl.first.size(); ++i) {
                                   const double rho = 0.5 * t.eps * (gl.first[i] + 1.0);
                                   removed += 0.5 * t.eps * gl.second[i] * k * unit_ball_volume(k) * std::pow(rho, k - 1) *
                                              (m > 0 ? unit_ball_volume(m) * std::pow(t.radius * t.radius - rho * rho, 0.5 * m) : 1.0);
                                 }
                                 return unit_ball_volume(dim_) * std::pow(t.radius, dim_) - removed;
                               }},
                    shape_);
}

Point Domain::bbox_lo() const {
  return std::visit(overloaded{[](const Ball& b) -> Point { return b.center.array() - b.radius; },
                               [](const Box& b) -> Point { return b.lo; },
                               [](const Annulus& a) -> Point { return a.center.array() - a.r_out; },
                               [](const TubeComplement& t) -> Point { return t.center.array() - t.radius; }},
                    shape_);
}

Point Domain::bbox_hi() const {
  return std::visit(overloaded{[](const Ball& b) -> Point { return b.center.array() + b.radius; },
                               [](const Box& b) -> Point { return b.hi; },
                               [](const Annulus& a) -> Point { return a.center.array() + a.r_out; },
                               [](const TubeComplement& t) -> Point { return t.center.array() + t.radius; }},
                    shape_);
}

std::vector<std::pair<double, double>> Domain::exterior_intervals(const Point& y, const Point& dir) const {
  std::vector<std::pair<double, double>> out;
  std::visit(overloaded{[&](const Ball& b) {
                          double t0, t1;
                          if (!sphere_hits(y, dir, b.center, b.radius, t0, t1)) {
                            out.emplace_back(0.0, kInf);
                            return;
                          }
                          if (t0 > 0.0) out.emplace_back(0.0, t0);
                          out.emplace_back(std::max(t1, 0.0), kInf);
                        },
                        [&](const Box& b) {
                          // Slab intersection.
                          double t_enter = -kInf, t_exit = kInf;
                          for (int k = 0; k < dim_; ++k) {
                            if (dir[k] == 0.0) {
                              if (y[k] <= b.lo[k] || y[k] >= b.hi[k]) {
                                t_enter = kInf;
                                t_exit = -kInf;
                              }
                              continue;
                            }
                            double ta = (b.lo[k] - y[k]) / dir[k], tb = (b.hi[k] - y[k]) / dir[k];
                            if (ta > tb) std::swap(ta, tb);
                            t_enter = std::max(t_enter, ta);
                            t_exit = std::min(t_exit, tb);
                          }
                          if (t_enter >= t_exit || t_exit <= 0.0) {
                            out.emplace_back(0.0, kInf);
                            return;
                          }
                          if (t_enter > 0.0) out.emplace_back(0.0, t_enter);
                          out.emplace_back(std::max(t_exit, 0.0), kInf);
                        },
                        [&](const Annulus& a) {
                          double o0, o1;
                          if (!sphere_hits(y, dir, a.center, a.r_out, o0, o1) || o1 <= 0.0) {
                            out.emplace_back(0.0, kInf);
                            return;
                          }
                          // Inside the outer ball on (o0, o1); remove the hole.
                          std::vector<std::pair<double, double>> inside;
                          double i0, i1;
                          if (sphere_hits(y, dir, a.center, a.r_in, i0, i1)) {
                            inside = {{o0, i0}, {i1, o1}};
                          } else {
                            inside = {{o0, o1}};
                          }
                          double cursor = 0.0;
                          for (auto [a0, a1] : inside) {
                            a0 = std::max(a0, 0.0);
                            if (a1 <= a0) continue;
                            if (a0 > cursor) out.emplace_back(cursor, a0);
                            cursor = std::max(cursor, a1);
                          }
                          out.emplace_back(cursor, kInf);
                        },
                        [&](const TubeComplement& t) {
                          double o0, o1;
                          if (!sphere_hits(y, dir, t.center, t.radius, o0, o1) || o1 <= 0.0) {
                            out.emplace_back(0.0, kInf);
                            return;
                          }
                          // Tube crossing: |Pi(w) + t Pi(dir)|^2 <= eps^2.
                          const Point pw = (y - t.center).head(t.codim), pd = dir.head(t.codim);
                          const double a2 = pd.squaredNorm(), b1 = pw.dot(pd), c0 = pw.squaredNorm() - t.eps * t.eps;
                          std::vector<std::pair<double, double>> inside;
                          if (a2 == 0.0) {
                            if (c0 > 0.0) inside = {{o0, o1}};
                          } else {
                            const double disc = b1 * b1 - a2 * c0;
                            if (disc <= 0.0) {
                              inside = {{o0, o1}};
                            } else {
                              const double q0 = (-b1 - std::sqrt(disc)) / a2, q1 = (-b1 + std::sqrt(disc)) / a2;
                              inside = {{o0, std::min(o1, q0)}, {std::max(o0, q1), o1}};
                            }
                          }
                          double cursor = 0.0;
                          for (auto [a0, a1] : inside) {
                            a0 = std::max(a0, 0.0);
                            if (a1 <= a0) continue;
                            if (a0 > cursor) out.emplace_back(cursor, a0);
                            cursor = std::max(cursor, a1);
                          }
                          out.emplace_back(cursor, kInf);
                        }},
             shape_);
  return out;
}

bool Domain::compactly_contains(const Domain& inner) const {
  if (inner.dim() != dim_) return false;
  // Sample the inner boundary densely and require a uniform positive margin.
  const auto check = [&](const Point& p) { return signed_distance(p) > 1e-12; };
  for (const Point& p : halton_points(inner.bbox_lo(), inner.bbox_hi(), 4000)) {
    if (!inner.contains(p)) continue;
    if (!check(p) || !check(inner.project(p))) return false;
  }
  return true;
}

std::vector<Point> halton_points(const Point& lo, const Point& hi, int n) {
  static constexpr std::array<int, kMaxDim> primes{2, 3, 5, 7, 11, 13, 17, 19};
  const int d = static_cast<int>(lo.size());
  std::vector<Point> out;
  out.reserve(n);
  for (int i = 1; i <= n; ++i) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      double f = 1.0, r = 0.0;
      int idx = i;
      while (idx > 0) {
        f /= primes[k];
        r += f * (idx % primes[k]);
        idx /= primes[k];
      }
      p[k] = lo[k] + (hi[k] - lo[k]) * r;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace levypot

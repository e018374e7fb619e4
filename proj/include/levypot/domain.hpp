#pragma once

#include "levypot/core.hpp"

#include <utility>
#include <variant>
#include <vector>

namespace levypot {

struct Ball {
  Point center;
  double radius = 1.0;
};

struct Box {
  Point lo;
  Point hi;
};

struct Annulus {
  Point center;
  double r_in = 0.5;
  double r_out = 1.0;
};

/// Ball B(center, radius) with the closed tube |Pi(x - center)| <= eps removed,
/// Pi keeping the first `codim` coordinates.
struct TubeComplement {
  Point center;
  double radius = 1.0;
  int codim = 2;
  double eps = 0.1;
};

using Shape = std::variant<Ball, Box, Annulus, TubeComplement>;

/// Bounded open set together with a finite singular set K inside it.
class Domain {
 public:
  Domain() = default;
  explicit Domain(Shape shape, std::vector<Point> singular = {});

  static Domain ball(const Point& center, double radius, std::vector<Point> singular = {}) {
    return Domain(Ball{center, radius}, std::move(singular));
  }
  static Domain ball(int d, double radius) { return ball(zero_point(d), radius); }
  static Domain box(const Point& lo, const Point& hi) { return Domain(Box{lo, hi}); }
  static Domain interval(double a, double b) { return box(make_point({a}), make_point({b})); }
  static Domain annulus(const Point& center, double r_in, double r_out) {
    return Domain(Annulus{center, r_in, r_out});
  }
  static Domain tube_complement(const Point& center, double radius, int codim, double eps) {
    return Domain(TubeComplement{center, radius, codim, eps});
  }

  const Shape& shape() const { return shape_; }
  const std::vector<Point>& singular_set() const { return singular_; }
  int dim() const { return dim_; }

  const Ball* as_ball() const { return std::get_if<Ball>(&shape_); }

  /// Membership in the open set.
  bool contains(const Point& x) const { return signed_distance(x) > 0.0; }

  /// Distance to the boundary, positive inside and negative outside. Exact for
  /// balls, boxes (inside), and annuli.
  double signed_distance(const Point& x) const;

  /// Nearest point on the boundary.
  Point project(const Point& x) const;

  /// Unit outward normal at the boundary point nearest to x.
  Point outward_normal(const Point& x) const;

  double diameter() const;
  double volume() const;
  Point bbox_lo() const;
  Point bbox_hi() const;
  /// Scale used for geometric tolerances (radius, half-diagonal).
  double length_scale() const { return 0.5 * diameter(); }

  /// Parameter intervals t > 0 along y + t*dir lying outside the open set.
  /// The last interval is unbounded ([a, inf)).
  std::vector<std::pair<double, double>> exterior_intervals(const Point& y, const Point& dir) const;

  /// Whether the closure of `inner` lies in this (open) set.
  bool compactly_contains(const Domain& inner) const;

 private:
  Shape shape_;
  std::vector<Point> singular_;
  int dim_ = 0;
};

/// Halton low-discrepancy points in the box [lo, hi]. Prefixes are nested, so
/// enlarging n only adds points.
std::vector<Point> halton_points(const Point& lo, const Point& hi, int n);

}  // namespace levypot

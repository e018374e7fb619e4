#pragma once

#include "levypot/core.hpp"
#include "levypot/taylor.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace levypot {

/// Bounded Lipschitz drift b: R^d -> R^d of the perturbed operator.
struct DriftField {
  std::string name = "zero";
  std::vector<double> params;
  int dim = 1;
  std::function<Point(const Point&)> b;
  /// Same field evaluated on Taylor jets; enables exact derivative recursions.
  std::function<std::vector<Jet>(const std::vector<Jet>&)> b_jet;
  /// Analytic divergence, when known.
  std::function<double(const Point&)> div_b;
  double lipschitz_bound = 0.0;
  double sup_bound = 0.0;
  bool identically_zero = true;

  Point operator()(const Point& x) const { return b(x); }

  /// Divergence: analytic if available, otherwise central differences with
  /// step h = 1e-5 (1 + |x|).
  double divergence(const Point& x) const;
  /// Jacobian db^i/dx_j by central differences (or jets if available).
  Matrix jacobian(const Point& x) const;
};

/// Built-in drift families, selectable by name:
///   zero                      b = 0
///   constant   [c_1..c_d]     b = c
///   identity                  b = x
///   linear     [A row-major]  b = A x
///   sine       [amp]          b_i = amp sin(x_i)
///   sin_cos    [amp]          (d = 2) b = amp (sin x_2, cos x_1), divergence free
///   kolmogorov                (d = 2) b = (0, x_1)
///   tanh_shear [amp]          b_i = amp tanh(x_{i+1 mod d})
DriftField make_drift(const std::string& name, int dim, const std::vector<double>& params = {});

std::vector<std::string> builtin_drift_names();

/// Field with drift b replaced by -b (used for the dual process).
DriftField negated(const DriftField& drift);

/// Empirical checks of the DriftField invariants on sample points:
/// |b(x)| <= sup_bound and |b(x)-b(y)| <= lipschitz_bound |x-y|.
bool check_drift_bounds(const DriftField& drift, const std::vector<Point>& samples, double slack = 1e-9);

}  // namespace levypot

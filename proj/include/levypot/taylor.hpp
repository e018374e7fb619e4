#pragma once

#include "levypot/core.hpp"

#include <memory>
#include <vector>

namespace levypot {

/// Multivariate Taylor polynomial in d variables, truncated at total degree
/// `order`, expanded around a fixed base point. Arithmetic is exact up to the
/// truncation, so derivatives of composed smooth maps come out without
/// finite-difference noise.
class Jet {
 public:
  Jet() = default;
  Jet(int dim, int order, double value = 0.0);

  static Jet constant(int dim, int order, double value) { return Jet(dim, order, value); }
  /// The coordinate function x_i expanded at base value x0_i.
  static Jet variable(int dim, int order, int i, double x0_i);

  int dim() const { return dim_; }
  int order() const { return order_; }
  double value() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }

  /// Partial derivative of order |alpha| at the base point.
  double derivative(const std::vector<int>& alpha) const;

  /// d/dx_i as a jet of order-1.
  Jet partial(int i) const;

  /// Drop terms above the given degree.
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator+=(double c);
  Jet& operator*=(double c);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
  friend Jet operator+(Jet a, double c) { return a += c; }
  friend Jet operator+(double c, Jet a) { return a += c; }
  friend Jet operator-(Jet a, double c) { return a += -c; }
  friend Jet operator-(double c, Jet a) { return (a *= -1.0) += c; }
  friend Jet operator*(Jet a, double c) { return a *= c; }
  friend Jet operator*(double c, Jet a) { return a *= c; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

  /// f(p) given f and its derivatives f^(k)(p0), k = 0..order.
  Jet compose(const std::vector<double>& derivs) const;

  struct Layout;

 private:
  int dim_ = 0;
  int order_ = 0;
  std::shared_ptr<const Layout> layout_;
  std::vector<double> coeffs_;
};

Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet exp(const Jet& x);
Jet tanh(const Jet& x);

}  // namespace levypot

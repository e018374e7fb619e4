#include "levypot/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <queue>
#include <mutex>

namespace levypot::quad {

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double* error_estimate,
                 double abs_tol) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, rel_tol, error_estimate, abs_tol);
  if (std::isinf(b)) {
    // t = a + u / (1 - u) maps [0, 1) onto [a, inf).
    auto g = [&](double u) {
      if (u >= 1.0) return 0.0;
      const double w = 1.0 - u;
      return f(a + u / w) / (w * w);
    };
    return integrate(g, 0.0, 1.0, rel_tol, error_estimate, abs_tol);
  }
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  // Kronrod estimate and |Kronrod - Gauss| from one set of 31 evaluations.
  static const auto gauss_weight = [] {
    using G = boost::math::quadrature::gauss<double, 15>;
    std::array<double, 16> w{};
    for (std::size_t i = 0; i < GK::abscissa().size(); ++i)
      for (std::size_t j = 0; j < G::abscissa().size(); ++j)
        if (std::abs(GK::abscissa()[i] - G::abscissa()[j]) < 1e-14) w[i] = G::weights()[j];
    return w;
  }();
  auto panel = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const auto& x = GK::abscissa();
    const auto& wk = GK::weights();
    const double f0 = f(c);
    double k = wk[0] * f0, g = gauss_weight[0] * f0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double fs = f(c - h * x[i]) + f(c + h * x[i]);
      k += wk[i] * fs;
      g += gauss_weight[i] * fs;
    }
    return Panel{lo, hi, h * k, h * std::abs(k - g)};
  };
  std::priority_queue<Panel> heap;
  heap.push(panel(a, b));
  double total = heap.top().value, total_err = heap.top().error;
  constexpr int kMaxPanels = 2000;
  int panels = 1;
  constexpr double kRoundoff = 100.0 * std::numeric_limits<double>::epsilon();
  while (total_err > std::max({abs_tol, rel_tol * std::abs(total), kRoundoff * std::abs(total)}) &&
         panels < kMaxPanels) {
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const Panel l = panel(worst.a, mid), r = panel(mid, worst.b);
    total += l.value + r.value - worst.value;
    total_err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++panels;
  }
  // Re-sum to shed the drift of incremental updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  if (error_estimate) *error_estimate = total_err;
  return total;
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b, rel_tol);
}

namespace {

Rule1D legendre_reference(int n) {
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  Rule1D r;
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  // legendre_p_zeros returns the nonnegative roots in increasing order.
  for (double z : zeros) {
    const double dp = boost::math::legendre_p_prime<double>(n, z);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    if (z == 0.0) {
      r.nodes.push_back(0.0);
      r.weights.push_back(w);
    } else {
      r.nodes.push_back(z);
      r.weights.push_back(w);
      r.nodes.push_back(-z);
      r.weights.push_back(w);
    }
  }
  cache.emplace(n, r);
  return r;
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ArgumentError("gauss_legendre: n must be positive");
  Rule1D r = legendre_reference(n);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = m + h * r.nodes[i];
    r.weights[i] *= h;
  }
  return r;
}

SphereRule sphere_rule(int d, int n) {
  require_dim(d);
  SphereRule s;
  if (d == 1) {
    s.directions = {make_point({1.0}), make_point({-1.0})};
    s.weights = {1.0, 1.0};
    return s;
  }
  if (d == 2) {
    const int m = 2 * n;
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * kPi * (k + 0.5) / m;
      s.directions.push_back(make_point({std::cos(th), std::sin(th)}));
      s.weights.push_back(2.0 * kPi / m);
    }
    return s;
  }
  // d >= 3: Gauss in t = cos(theta) with weight (1-t^2)^{(d-3)/2}, times a rule on S^{d-2}.
  const SphereRule sub = sphere_rule(d - 1, n);
  const Rule1D g = gauss_legendre(n, -1.0, 1.0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double t = g.nodes[i];
    const double sn = std::sqrt(1.0 - t * t);
    const double w = g.weights[i] * std::pow(1.0 - t * t, 0.5 * (d - 3));
    for (std::size_t j = 0; j < sub.directions.size(); ++j) {
      Point p(d);
      p[0] = t;
      p.tail(d - 1) = sn * sub.directions[j];
      s.directions.push_back(p);
      s.weights.push_back(w * sub.weights[j]);
    }
  }
  return s;
}

double sphere_average(const std::function<double(const Point&)>& f, const Point& c, double r, int n) {
  const int d = static_cast<int>(c.size());
  const SphereRule s = sphere_rule(d, n);
  double acc = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < s.directions.size(); ++i) {
    acc += s.weights[i] * f(c + r * s.directions[i]);
    wsum += s.weights[i];
  }
  return acc / wsum;
}

Cubature box_rule(const Point& lo, const Point& hi, int n_per_dim) {
  const int d = static_cast<int>(lo.size());
  std::vector<Rule1D> rules;
  for (int k = 0; k < d; ++k) rules.push_back(gauss_legendre(n_per_dim, lo[k], hi[k]));
  Cubature c;
  std::vector<int> idx(d, 0);
  while (true) {
    Point p(d);
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      p[k] = rules[k].nodes[idx[k]];
      w *= rules[k].weights[idx[k]];
    }
    c.nodes.push_back(p);
    c.weights.push_back(w);
    int k = 0;
    while (k < d && ++idx[k] == n_per_dim) idx[k++] = 0;
    if (k == d) break;
  }
  return c;
}

Cubature ball_rule(const Point& c, double r, int n_radial, int n_angular) {
  const int d = static_cast<int>(c.size());
  const SphereRule s = sphere_rule(d, n_angular);
  const Rule1D g = gauss_legendre(n_radial, 0.0, r);
  Cubature out;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double rho = g.nodes[i];
    const double jac = std::pow(rho, d - 1);
    for (std::size_t j = 0; j < s.directions.size(); ++j) {
      out.nodes.push_back(c + rho * s.directions[j]);
      out.weights.push_back(g.weights[i] * jac * s.weights[j]);
    }
  }
  return out;
}

}  // namespace levypot::quad

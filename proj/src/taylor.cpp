#include "levypot/taylor.hpp"

#include <map>
#include <mutex>

namespace levypot {

// Monomials with |alpha| <= order in graded order, plus the product table.
struct Jet::Layout {
  int dim = 0;
  int order = 0;
  std::vector<std::vector<int>> exponents;
  std::vector<int> degree;
  std::map<std::vector<int>, int> index;
  std::vector<std::vector<std::pair<int, int>>> products;  // products[i] = {(j, k): e_j + e_k = e_i}

  int find(const std::vector<int>& e) const {
    auto it = index.find(e);
    return it == index.end() ? -1 : it->second;
  }
};

namespace {

void enumerate(int dim, int remaining, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
  if (pos == dim) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    cur[pos] = k;
    enumerate(dim, remaining - k, cur, pos + 1, out);
  }
  cur[pos] = 0;
}

std::shared_ptr<const Jet::Layout> layout_for(int dim, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const Jet::Layout>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find({dim, order}); it != cache.end()) return it->second;
  auto L = std::make_shared<Jet::Layout>();
  L->dim = dim;
  L->order = order;
  for (int deg = 0; deg <= order; ++deg) {
    std::vector<std::vector<int>> all;
    std::vector<int> cur(dim, 0);
    enumerate(dim, deg, cur, 0, all);
    for (auto& e : all) {
      int s = 0;
      for (int v : e) s += v;
      if (s != deg) continue;
      L->index[e] = static_cast<int>(L->exponents.size());
      L->exponents.push_back(e);
      L->degree.push_back(deg);
    }
  }
  const auto n = L->exponents.size();
  L->products.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (L->degree[j] + L->degree[k] > order) continue;
      std::vector<int> e(dim);
      for (int m = 0; m < dim; ++m) e[m] = L->exponents[j][m] + L->exponents[k][m];
      L->products[L->index.at(e)].emplace_back(static_cast<int>(j), static_cast<int>(k));
    }
  }
  cache.emplace(std::make_pair(dim, order), L);
  return L;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

Jet::Jet(int dim, int order, double value) : dim_(dim), order_(order), layout_(layout_for(dim, order)) {
  coeffs_.assign(layout_->exponents.size(), 0.0);
  coeffs_[0] = value;
}

Jet Jet::variable(int dim, int order, int i, double x0_i) {
  Jet j(dim, order, x0_i);
  if (order >= 1) {
    std::vector<int> e(dim, 0);
    e[i] = 1;
    j.coeffs_[j.layout_->find(e)] = 1.0;
  }
  return j;
}

double Jet::derivative(const std::vector<int>& alpha) const {
  const int idx = layout_->find(alpha);
  if (idx < 0) return 0.0;
  double f = 1.0;
  for (int a : alpha) f *= factorial(a);
  return coeffs_[idx] * f;
}

Jet Jet::partial(int i) const {
  const int new_order = order_ > 0 ? order_ - 1 : 0;
  Jet out(dim_, new_order, 0.0);
  for (std::size_t k = 0; k < out.coeffs_.size(); ++k) {
    std::vector<int> e = out.layout_->exponents[k];
    e[i] += 1;
    const int src = layout_->find(e);
    if (src >= 0) out.coeffs_[k] = coeffs_[src] * e[i];
  }
  return out;
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet out(dim_, order, 0.0);
  for (std::size_t k = 0; k < out.coeffs_.size(); ++k) out.coeffs_[k] = coeffs_[layout_->find(out.layout_->exponents[k])];
  return out;
}

namespace {
// Bring both operands to the common (lower) order.
void align(Jet& a, const Jet& b, Jet& b_out) {
  const int o = std::min(a.order(), b.order());
  a = a.truncated(o);
  b_out = b.truncated(o);
}
}  // namespace

Jet& Jet::operator+=(const Jet& o) {
  Jet b;
  align(*this, o, b);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += b.coeffs_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  Jet b;
  align(*this, o, b);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= b.coeffs_[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  Jet b;
  align(*this, o, b);
  std::vector<double> out(coeffs_.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (auto [j, k] : layout_->products[i]) out[i] += coeffs_[j] * b.coeffs_[k];
  coeffs_ = std::move(out);
  return *this;
}

Jet& Jet::operator+=(double c) {
  coeffs_[0] += c;
  return *this;
}

Jet& Jet::operator*=(double c) {
  for (double& v : coeffs_) v *= c;
  return *this;
}

Jet Jet::compose(const std::vector<double>& derivs) const {
  // f(p0 + h) = sum_k f^(k)(p0)/k! h^k with h nilpotent of index order+1.
  Jet h = *this;
  h.coeffs_[0] = 0.0;
  Jet result(dim_, order_, derivs.empty() ? 0.0 : derivs[0]);
  Jet power(dim_, order_, 1.0);
  for (int k = 1; k <= order_ && k < static_cast<int>(derivs.size()); ++k) {
    power *= h;
    result += power * (derivs[k] / factorial(k));
  }
  return result;
}

Jet sin(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  std::vector<double> d(x.order() + 1);
  for (int k = 0; k <= x.order(); ++k) d[k] = (k % 4 == 0) ? s : (k % 4 == 1) ? c : (k % 4 == 2) ? -s : -c;
  return x.compose(d);
}

Jet cos(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  std::vector<double> d(x.order() + 1);
  for (int k = 0; k <= x.order(); ++k) d[k] = (k % 4 == 0) ? c : (k % 4 == 1) ? -s : (k % 4 == 2) ? -c : s;
  return x.compose(d);
}

Jet exp(const Jet& x) {
  return x.compose(std::vector<double>(x.order() + 1, std::exp(x.value())));
}

Jet tanh(const Jet& x) {
  // Derivatives of tanh are polynomials in t = tanh: P_{k+1}(t) = (1 - t^2) P_k'(t).
  const double t = std::tanh(x.value());
  std::vector<double> poly{0.0, 1.0};  // P_0(t) = t
  std::vector<double> d(x.order() + 1);
  for (int k = 0; k <= x.order(); ++k) {
    double v = 0.0, tp = 1.0;
    for (double c : poly) {
      v += c * tp;
      tp *= t;
    }
    d[k] = v;
    std::vector<double> dp(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) dp[i - 1] = poly[i] * static_cast<double>(i);
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      next[i] += dp[i];
      next[i + 2] -= dp[i];
    }
    poly = std::move(next);
  }
  return x.compose(d);
}

}  // namespace levypot

#include "levypot/stats.hpp"

#include "levypot/core.hpp"

#include <boost/math/distributions/chi_squared.hpp>

namespace levypot {

namespace {
double chi2_upper_tail(double stat, int dof) {
  if (dof < 1) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), stat));
}
}  // namespace

ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& expected_prob) {
  if (observed.size() != expected_prob.size() || observed.empty())
    throw ArgumentError("chi_square_test: bin count mismatch");
  double n = 0.0;
  for (double o : observed) n += o;
  ChiSquareResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * expected_prob[i];
    if (e <= 0.0) throw ArgumentError("chi_square_test: empty expected bin");
    r.statistic += (observed[i] - e) * (observed[i] - e) / e;
  }
  r.dof = static_cast<int>(observed.size()) - 1;
  r.p_value = chi2_upper_tail(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw ArgumentError("chi_square_two_sample: bin count mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  ChiSquareResult r;
  int used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tot = a[i] + b[i];
    if (tot == 0.0) continue;
    const double diff = ka * a[i] - kb * b[i];
    r.statistic += diff * diff / tot;
    ++used;
  }
  r.dof = used - 1;
  r.p_value = chi2_upper_tail(r.statistic, r.dof);
  return r;
}

}  // namespace levypot

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace levypot {

/// Neumaier-compensated sum. Merging in a fixed order keeps reductions
/// independent of how work was split across threads.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void merge(const KahanSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Running first and second moments of a per-path statistic.
class MomentAccumulator {
 public:
  void add(double x) {
    s1_.add(x);
    s2_.add(x * x);
    ++n_;
  }
  void merge(const MomentAccumulator& o) {
    s1_.merge(o.s1_);
    s2_.merge(o.s2_);
    n_ += o.n_;
  }
  std::int64_t count() const { return n_; }
  double mean() const { return n_ ? s1_.value() / static_cast<double>(n_) : 0.0; }
  double variance() const {
    if (n_ < 2) return 0.0;
    const double m = mean();
    const double v = (s2_.value() - static_cast<double>(n_) * m * m) / static_cast<double>(n_ - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const { return n_ ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  KahanSum s1_, s2_;
  std::int64_t n_ = 0;
};

/// Pearson chi-square statistic and its upper-tail p-value.
struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& expected_prob);

/// Two-sample chi-square homogeneity test on pre-binned counts.
ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b);

/// Kolmogorov-Smirnov distance between an empirical sample and a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf);

}  // namespace levypot

#include <algorithm>

namespace levypot {

template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return dmax;
}

}  // namespace levypot

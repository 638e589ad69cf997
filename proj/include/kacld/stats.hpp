#pragma once

// Small statistics helpers shared by the simulation modules and tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kacld {

/// Running mean and variance (Welford), mergeable (Chan et al.).
struct MeanAccumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const MeanAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n1 = static_cast<double>(count);
    const double n2 = static_cast<double>(other.count);
    const double d = other.mean - mean;
    const double n = n1 + n2;
    mean += d * n2 / n;
    m2 += other.m2 + d * d * n1 * n2 / n;
    count += other.count;
  }

  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double std_error() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

/// Proportion p = hits/n with the binomial standard error sqrt(p(1-p)/n).
struct Proportion {
  double p = 0.0;
  double se = 0.0;
};

inline Proportion proportion(std::size_t hits, std::size_t n) {
  if (n == 0) return {};
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

/// Empirical distribution function over a sorted copy of the data.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::vector<double> data) : sorted_(std::move(data)) {
    std::sort(sorted_.begin(), sorted_.end());
  }

  /// Fraction of observations <= x.
  double operator()(double x) const {
    if (sorted_.empty()) return 0.0;
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }

  std::span<const double> sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return 1.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <typename Cdf>
double ks_one_sample(std::vector<double> data, Cdf&& cdf) {
  if (data.empty()) return 1.0;
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double d = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double f = cdf(data[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace kacld

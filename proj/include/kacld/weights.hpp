#pragma once

// Collision weights beta_{j,n} of the random binary tree, their alpha-sums
// M_n(alpha) = sum_j beta_{j,n}^alpha, the normalization
//
//   m_n(alpha) = Gamma(n + S) / (Gamma(n) Gamma(S + 1)),  S = Q(alpha),
//
// and the martingale M_n(alpha) / m_n(alpha).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kacld/error.hpp"
#include "kacld/kernels.hpp"
#include "kacld/random.hpp"

namespace kacld {

/// One growth step: leaf `index` (0-based, before the step) was split by (L, R).
struct SplitRecord {
  std::size_t index;
  double parent;
  Collision collision;
};

class WeightArray {
 public:
  WeightArray() { reset({}); }
  explicit WeightArray(std::span<const double> alphas) { reset(alphas); }

  /// Back to the single root weight beta_{1,1} = 1.
  void reset(std::span<const double> alphas) {
    alphas_.assign(alphas.begin(), alphas.end());
    betas_.clear();
    betas_.push_back(1.0);
    sums_.assign(alphas_.size(), 1.0);
    beta_max_ = 1.0;
  }

  /// Splits a uniformly chosen leaf into (L beta, R beta). Child one is
  /// written in place and child two appended; every downstream statistic is
  /// permutation invariant.
  SplitRecord grow(const CollisionKernel& kernel, Stream& rng) {
    const std::size_t i = static_cast<std::size_t>(rng.index(betas_.size()));
    const Collision c = kernel.sample(rng);
    return apply_split(i, c);
  }

  SplitRecord apply_split(std::size_t i, Collision c) {
    const double parent = betas_[i];
    for (std::size_t a = 0; a < alphas_.size(); ++a)
      sums_[a] += power(parent, alphas_[a]) *
                  (power(c.L, alphas_[a]) + power(c.R, alphas_[a]) - 1.0);
    const double left = c.L * parent;
    const double right = c.R * parent;
    betas_[i] = left;
    betas_.push_back(right);
    beta_max_ = -1.0;  // recomputed lazily
    return {i, parent, c};
  }

  std::size_t n() const { return betas_.size(); }
  std::span<const double> betas() const { return betas_; }
  std::span<const double> alphas() const { return alphas_; }

  /// M_n(alpha) for a tracked alpha.
  double M(double alpha) const {
    for (std::size_t a = 0; a < alphas_.size(); ++a)
      if (alphas_[a] == alpha) return sums_[a];
    throw DomainError("WeightArray::M: alpha not tracked");
  }
  double M_at(std::size_t slot) const { return sums_.at(slot); }

  /// beta_(n) = max_j beta_{j,n}.
  double beta_max() const {
    if (beta_max_ < 0.0) beta_max_ = *std::max_element(betas_.begin(), betas_.end());
    return beta_max_;
  }

 private:
  static double power(double x, double s) {
    if (s == 1.0) return x;
    if (s == 2.0) return x * x;
    return pow0(x, s);
  }

  std::vector<double> alphas_;
  std::vector<double> betas_;
  std::vector<double> sums_;
  mutable double beta_max_ = 1.0;
};

/// Grows `w` (which is reset first) to exactly n leaves.
inline void grow_weights_into(WeightArray& w, const CollisionKernel& kernel, std::size_t n,
                              std::span<const double> alphas, Stream& rng) {
  if (n == 0) throw DomainError("grow_weights: n must be at least 1");
  w.reset(alphas);
  while (w.n() < n) w.grow(kernel, rng);
}

inline WeightArray grow_weights(const CollisionKernel& kernel, std::size_t n,
                                std::span<const double> alphas, Stream& rng) {
  WeightArray w;
  grow_weights_into(w, kernel, n, alphas, rng);
  return w;
}

// ---------------------------------------------------------------------------
// m_n(alpha)

struct WeightNorm {
  double S_alpha = 0.0;
  std::size_t n = 1;
  double m = 1.0;
  double log_m = 0.0;
};

namespace detail {
inline void check_norm_domain(double S) {
  if (!(S > -1.0) || !std::isfinite(S))
    throw DomainError("m_n(alpha) needs S(alpha) > -1");
}
}  // namespace detail

/// m_n via log m_{k+1} = log m_k + log1p(S/k), compensated summation.
inline WeightNorm mean_weight_norm(double S_alpha, std::size_t n) {
  detail::check_norm_domain(S_alpha);
  if (n == 0) throw DomainError("m_n(alpha) needs n >= 1");
  double sum = 0.0, comp = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double term = std::log1p(S_alpha / static_cast<double>(k));
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) comp += (sum - t) + term;
    else comp += (term - t) + sum;
    sum = t;
  }
  WeightNorm w;
  w.S_alpha = S_alpha;
  w.n = n;
  w.log_m = sum + comp;
  w.m = std::exp(w.log_m);
  return w;
}

/// Cached prefix table of log m_n for repeated lookups at a fixed S.
/// Grows on demand; not shared between threads.
class NormTable {
 public:
  explicit NormTable(double S_alpha) : S_(S_alpha) {
    detail::check_norm_domain(S_alpha);
    log_m_.push_back(0.0);  // n = 1
    comp_.push_back(0.0);
  }

  double S_alpha() const { return S_; }

  double log_m(std::size_t n) {
    if (n == 0) throw DomainError("m_n(alpha) needs n >= 1");
    while (log_m_.size() < n) {
      const std::size_t k = log_m_.size();  // extends from m_k to m_{k+1}
      const double term = std::log1p(S_ / static_cast<double>(k));
      const double sum = log_m_.back();
      double comp = comp_.back();
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) comp += (sum - t) + term;
      else comp += (term - t) + sum;
      log_m_.push_back(t);
      comp_.push_back(comp);
    }
    return log_m_[n - 1] + comp_[n - 1];
  }

  double m(std::size_t n) { return std::exp(log_m(n)); }

 private:
  double S_;
  std::vector<double> log_m_;
  std::vector<double> comp_;
};

/// M_n(alpha) / m_n(alpha).
inline double tilde_M(const WeightArray& w, double alpha, double S_alpha) {
  return w.M(alpha) / mean_weight_norm(S_alpha, w.n()).m;
}

inline double tilde_M(const WeightArray& w, double alpha, NormTable& norms) {
  return w.M(alpha) / norms.m(w.n());
}

}  // namespace kacld

#pragma once

// The solution process V_t = sum_j beta_{j,nu_t} X_j and the max process
// H_t = max_j |beta_{j,nu_t} X_j| sampled at a fixed time t, plus a Wild
// recursion sampler for H given nu_t = n that does not use the weight array.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kacld/error.hpp"
#include "kacld/initial_data.hpp"
#include "kacld/kernels.hpp"
#include "kacld/random.hpp"
#include "kacld/weights.hpp"

namespace kacld {

/// nu_t of a Yule process started from one individual: geometric on
/// {1, 2, ...} with success probability e^{-t}, by inverse transform.
inline std::size_t sample_yule(double t, Stream& rng) {
  if (!(t >= 0.0)) throw DomainError("sample_yule: t must be non-negative");
  if (t == 0.0) return 1;
  const double log_q = std::log1p(-std::exp(-t));  // log(1 - e^{-t})
  if (log_q == 0.0) return 1;
  const double k = std::floor(std::log(rng.uniform()) / log_q);
  if (!(k < 1e15)) throw DomainError("sample_yule: t too large");
  return 1 + static_cast<std::size_t>(k);
}

struct PathSample {
  double t = 0.0;
  std::size_t n = 1;      ///< nu_t
  double V = 0.0;
  double H = 0.0;
  double M_alpha = 1.0;   ///< M_{nu_t}(alpha)
  double beta_max = 1.0;  ///< beta_(nu_t)
};

/// Reusable sampler; owns the scratch weight array. One per thread.
class PathSampler {
 public:
  PathSampler(const CollisionKernel& kernel, const InitialLaw& law, double alpha)
      : kernel_(&kernel), law_(&law), alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  }

  /// Draws n = nu_t, grows the tree to n leaves, draws the n leaf values.
  /// V and H are built from the same weights and the same X draws.
  PathSample sample(double t, Stream& rng) { return sample_given_n(t, sample_yule(t, rng), rng); }

  PathSample sample_given_n(double t, std::size_t n, Stream& rng) {
    const double alphas[1] = {alpha_};
    grow_weights_into(weights_, *kernel_, n, alphas, rng);
    return finish(t, rng);
  }

  /// Continues the tree of the previous sample forward to time t + dt: each
  /// leaf splits independently at rate one, split leaves get fresh X draws,
  /// untouched leaves keep theirs. The result is an exact draw of the time
  /// t + dt marginal coupled to the previous one.
  PathSample extend(double t_new, double dt, Stream& rng) {
    const std::size_t n0 = weights_.n();
    // nu_{t+dt} - nu_t given nu_t = n0 is NegBin(n0, e^{-dt}); realize it by
    // running the pure-birth chain for dt.
    std::size_t n = n0;
    double clock = 0.0;
    while (true) {
      clock += rng.exponential() / static_cast<double>(n);
      if (clock > dt) break;
      ++n;
    }
    while (weights_.n() < n) {
      const auto rec = weights_.grow(*kernel_, rng);
      leaves_[rec.index] = law_->sample(rng);
      leaves_.push_back(law_->sample(rng));
    }
    return summarize(t_new);
  }

  const WeightArray& weights() const { return weights_; }
  std::span<const double> leaves() const { return leaves_; }

 private:
  PathSample finish(double t, Stream& rng) {
    leaves_.resize(weights_.n());
    for (auto& x : leaves_) x = law_->sample(rng);
    return summarize(t);
  }

  PathSample summarize(double t) const {
    const auto betas = weights_.betas();
    double v = 0.0, h = 0.0;
    for (std::size_t j = 0; j < betas.size(); ++j) {
      const double term = betas[j] * leaves_[j];
      v += term;
      h = std::max(h, std::abs(term));
    }
    PathSample p;
    p.t = t;
    p.n = betas.size();
    p.V = v;
    p.H = h;
    p.M_alpha = weights_.M_at(0);
    p.beta_max = weights_.beta_max();
    return p;
  }

  const CollisionKernel* kernel_;
  const InitialLaw* law_;
  double alpha_;
  WeightArray weights_;
  std::vector<double> leaves_;
};

inline PathSample sample_path(const CollisionKernel& kernel, const InitialLaw& law, double t,
                              double alpha, Stream& rng) {
  PathSampler s(kernel, law, alpha);
  return s.sample(t, rng);
}

struct Rescaled {
  double v;
  double h;
};

/// (e^{-mu t} V, e^{-mu t} H).
inline Rescaled rescaled(const PathSample& p, double mu_alpha) {
  const double f = std::exp(-mu_alpha * p.t);
  return {f * p.V, f * p.H};
}

inline constexpr std::size_t kWildOracleMaxN = 12;

namespace detail {
inline double wild_draw(const CollisionKernel& kernel, const InitialLaw& law, std::size_t n,
                        Stream& rng) {
  if (n == 1) return std::abs(law.sample(rng));
  const std::size_t i = 1 + static_cast<std::size_t>(rng.index(n - 1));  // left size in 1..n-1
  const Collision c = kernel.sample(rng);
  const double left = wild_draw(kernel, law, i, rng);
  const double right = wild_draw(kernel, law, n - i, rng);
  return std::max(c.L * left, c.R * right);
}
}  // namespace detail

/// One draw of the max-kernel Wild sum of order n: a uniform split (i, n-i),
/// i in {1, ..., n-1}, then max(L h_i, R h_{n-i}) with independent
/// sub-draws. Distributed as H_t given nu_t = n.
inline double wild_oracle_max(const CollisionKernel& kernel, const InitialLaw& law,
                              std::size_t n, Stream& rng) {
  if (n < 1 || n > kWildOracleMaxN)
    throw DomainError("wild_oracle_max: n must lie in [1, 12]");
  return detail::wild_draw(kernel, law, n, rng);
}

}  // namespace kacld

#pragma once

// Limit objects of the rescaled processes.
//
// Z_inf(alpha) is the mean-one positive solution of
//     Z =d Theta^{S(alpha)} (L^alpha Z1 + R^alpha Z2),
// approximated either by population dynamics on that equation or by the
// tree construction e^{-S(alpha) t} M_{nu_t}(alpha) at a large time t.
// V_inf is the scale mixture Z^{1/alpha} S_alpha of a stable law, H_inf the
// scale mixture of Frechet laws with P{H_inf <= x} = E exp(-c0 x^{-alpha} Z).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "kacld/error.hpp"
#include "kacld/kernels.hpp"
#include "kacld/parallel.hpp"
#include "kacld/processes.hpp"
#include "kacld/random.hpp"
#include "kacld/stats.hpp"
#include "kacld/weights.hpp"

namespace kacld {

enum class PoolProvenance { fixed_point, tree };

struct ZPool {
  std::vector<double> samples;
  double alpha = 1.0;
  double S_alpha = 0.0;
  PoolProvenance provenance = PoolProvenance::fixed_point;
  double tree_time = 0.0;  ///< t for tree pools
  std::size_t iterations = 0;  ///< completed fixed-point iterations

  /// `size` copies of 1: consistent with E[Z] = 1.
  static ZPool ones(std::size_t size, double alpha, double S_alpha) {
    ZPool p;
    p.samples.assign(size, 1.0);
    p.alpha = alpha;
    p.S_alpha = S_alpha;
    return p;
  }

  MeanAccumulator moments() const {
    MeanAccumulator acc;
    for (double z : samples) acc.add(z);
    return acc;
  }
};

/// `iterations` rounds of population dynamics. Each new member is
/// Theta^S (L^alpha Z1 + R^alpha Z2) with Z1, Z2 drawn with replacement from
/// the previous round; Theta^0 is taken as the constant 1.
inline ZPool zpool_iterate(ZPool pool, const CollisionKernel& kernel, Stream& rng,
                           std::size_t iterations) {
  if (pool.samples.empty()) throw DomainError("zpool_iterate: empty pool");
  detail::check_norm_domain(pool.S_alpha);
  const double a = pool.alpha;
  const double S = pool.S_alpha;
  const std::size_t size = pool.samples.size();
  std::vector<double> next(size);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t k = 0; k < size; ++k) {
      const double z1 = pool.samples[rng.index(size)];
      const double z2 = pool.samples[rng.index(size)];
      const Collision c = kernel.sample(rng);
      const double theta = S == 0.0 ? 1.0 : std::pow(rng.uniform(), S);
      next[k] = theta * (pow0(c.L, a) * z1 + pow0(c.R, a) * z2);
    }
    pool.samples.swap(next);
    ++pool.iterations;
  }
  return pool;
}

/// Pool of e^{-S t} M_{nu_t}(alpha) draws, chunked over `plan`.
inline ZPool zpool_from_trees(const CollisionKernel& kernel, double alpha, double S_alpha,
                              double t, std::size_t size, const ChunkPlan& plan) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  const double scale = std::exp(-S_alpha * t);
  auto parts = map_chunks(plan, size, [&](const ChunkRange& r, Stream& rng) {
    std::vector<double> out;
    out.reserve(r.size());
    WeightArray w;
    const double alphas[1] = {alpha};
    for (std::size_t i = r.begin; i < r.end; ++i) {
      grow_weights_into(w, kernel, sample_yule(t, rng), alphas, rng);
      out.push_back(scale * w.M_at(0));
    }
    return out;
  });
  ZPool pool;
  pool.alpha = alpha;
  pool.S_alpha = S_alpha;
  pool.provenance = PoolProvenance::tree;
  pool.tree_time = t;
  pool.samples.reserve(size);
  for (auto& p : parts) pool.samples.insert(pool.samples.end(), p.begin(), p.end());
  return pool;
}

inline ZPool zpool_from_trees(const CollisionKernel& kernel, double alpha, double t,
                              std::size_t size, const ChunkPlan& plan) {
  return zpool_from_trees(kernel, alpha, spectral(kernel, alpha).Q, t, size, plan);
}

// ---------------------------------------------------------------------------
// Stable parameters and samplers

struct StableParams {
  double alpha = 1.5;
  double lambda = 0.0;    ///< characteristic exponent scale
  double eta_skew = 0.0;  ///< (c+ - c-) / (c+ + c-)
  double gamma0 = 0.0;        ///< alpha = 1 only
  double cauchy_scale = 0.0;  ///< alpha = 1 only, c0+ pi
};

/// lambda = (c+ + c-) pi / (2 Gamma(alpha) sin(pi alpha / 2)),
/// eta = (c+ - c-) / (c+ + c-).
inline StableParams stable_params(double c_plus, double c_minus, double alpha,
                                  double gamma0 = 0.0) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  if (!(c_plus >= 0.0) || !(c_minus >= 0.0) || !(c_plus + c_minus > 0.0))
    throw DomainError("stable_params: need c+, c- >= 0 with c+ + c- > 0");
  if (alpha == 1.0 && c_plus != c_minus)
    throw DomainError("stable_params: alpha = 1 requires c+ = c-");
  StableParams p;
  p.alpha = alpha;
  const double c0 = c_plus + c_minus;
  p.lambda = c0 * std::numbers::pi /
             (2.0 * std::tgamma(alpha) * std::sin(std::numbers::pi * alpha / 2.0));
  p.eta_skew = (c_plus - c_minus) / c0;
  if (alpha == 1.0) {
    p.gamma0 = gamma0;
    p.cauchy_scale = c_plus * std::numbers::pi;
  }
  return p;
}

/// Chambers-Mallows-Stuck draw with characteristic function
/// exp(-|xi|^alpha (1 - i beta tan(pi alpha/2) sign xi)), alpha != 1.
inline double sample_standard_stable(double alpha, double beta, Stream& rng) {
  const double v = std::numbers::pi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  const double tb = beta * std::tan(std::numbers::pi * alpha / 2.0);
  const double b = std::atan(tb) / alpha;
  const double s = std::pow(1.0 + tb * tb, 1.0 / (2.0 * alpha));
  return s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
}

/// Stable draw with characteristic exponent lambda |xi|^alpha (1 - i eta
/// tan(pi alpha / 2) sign xi): the standard draw scaled by lambda^{1/alpha}.
inline double sample_stable(const StableParams& p, Stream& rng) {
  if (p.alpha == 1.0)
    return p.gamma0 + p.cauchy_scale * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
  return std::pow(p.lambda, 1.0 / p.alpha) * sample_standard_stable(p.alpha, p.eta_skew, rng);
}

/// Z^{1/alpha} S_alpha, or Z (gamma0 + Cauchy(c0+ pi)) when alpha = 1.
inline double sample_V_infinity(const ZPool& pool, const StableParams& params, Stream& rng) {
  if (pool.samples.empty()) throw DomainError("sample_V_infinity: empty pool");
  const double z = pool.samples[rng.index(pool.samples.size())];
  if (params.alpha == 1.0) return z * sample_stable(params, rng);
  return std::pow(z, 1.0 / params.alpha) * sample_stable(params, rng);
}

/// Pool average of the mixed stable characteristic function.
inline std::complex<double> cf_V_infinity(double xi, std::span<const double> pool,
                                          const StableParams& params) {
  if (pool.empty()) throw DomainError("cf_V_infinity: empty pool");
  if (xi == 0.0) return {1.0, 0.0};
  double re = 0.0, im = 0.0;
  double decay, phase;
  if (params.alpha == 1.0) {
    decay = params.cauchy_scale * std::abs(xi);
    phase = params.gamma0 * xi;
  } else {
    const double base = std::pow(std::abs(xi), params.alpha) * params.lambda;
    decay = base;
    phase = base * params.eta_skew * std::tan(std::numbers::pi * params.alpha / 2.0) *
            (xi > 0.0 ? 1.0 : -1.0);
  }
  for (double z : pool) {
    const double mag = std::exp(-decay * z);
    re += mag * std::cos(phase * z);
    im += mag * std::sin(phase * z);
  }
  const double n = static_cast<double>(pool.size());
  return {re / n, im / n};
}

inline std::complex<double> cf_V_infinity(double xi, const ZPool& pool,
                                          const StableParams& params) {
  return cf_V_infinity(xi, std::span<const double>(pool.samples), params);
}

/// P{H_inf <= x}: E exp(-c0 x^{-alpha} Z) for x > 0, P{Z = 0} at 0, 0 below.
inline double cdf_H_infinity(double x, std::span<const double> pool, double c0, double alpha) {
  if (pool.empty()) throw DomainError("cdf_H_infinity: empty pool");
  const double n = static_cast<double>(pool.size());
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    std::size_t zeros = 0;
    for (double z : pool) zeros += (z == 0.0);
    return static_cast<double>(zeros) / n;
  }
  if (std::isinf(x)) return 1.0;
  const double rate = c0 * std::pow(x, -alpha);
  double acc = 0.0;
  for (double z : pool) acc += std::exp(-rate * z);
  return acc / n;
}

inline double cdf_H_infinity(double x, const ZPool& pool, double c0, double alpha) {
  return cdf_H_infinity(x, std::span<const double>(pool.samples), c0, alpha);
}

}  // namespace kacld

#pragma once

// Large-deviation estimates for the rescaled processes, the finite-n bounds
// for weighted sums of i.i.d. heavy-tailed variables, admissibility of
// threshold schedules x_t, the i.i.d. baseline and the residual of the
// kinetic equation satisfied by the distribution function of H_t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kacld/error.hpp"
#include "kacld/initial_data.hpp"
#include "kacld/kernels.hpp"
#include "kacld/parallel.hpp"
#include "kacld/processes.hpp"
#include "kacld/stats.hpp"

namespace kacld {

/// Minimum expected number of hits before a normal-approximation CI is trusted.
inline constexpr double kMinExpectedHits = 20.0;

// ---------------------------------------------------------------------------
// Tail of the rescaled processes

struct TailEstimate {
  double t = 0.0;
  double x = 0.0;
  std::size_t N = 0;
  std::size_t hits_V = 0;
  std::size_t hits_H = 0;
  double p_V = 0.0;
  double p_H = 0.0;
  double se_V = 0.0;
  double se_H = 0.0;
  double ratio_paper = 0.0;  ///< x^alpha p_V / c0
  double ratio_max = 0.0;    ///< p_V / p_H
  bool low_precision = false;
};

struct TailReport {
  std::vector<TailEstimate> rows;
  std::vector<std::string> warnings;
};

/// One pass over N paths at time t; every threshold and both processes are
/// evaluated on the same paths. `mu_alpha` is the rescaling rate.
inline TailReport estimate_tail(const CollisionKernel& kernel, const InitialLaw& law, double t,
                                std::span<const double> xs, std::size_t N, double mu_alpha,
                                const ChunkPlan& plan) {
  if (!(t >= 0.0)) throw DomainError("estimate_tail: t must be non-negative");
  if (N < 10000) throw DomainError("estimate_tail: N must be at least 10^4");
  for (double x : xs)
    if (!(x > 0.0)) throw DomainError("estimate_tail: thresholds must be positive");

  const double alpha = law.alpha();
  const double scale = std::exp(-mu_alpha * t);
  using Counts = std::vector<std::pair<std::size_t, std::size_t>>;
  const Counts counts = reduce_chunks(
      plan, N,
      [&](const ChunkRange& r, Stream& rng) {
        Counts c(xs.size(), {0, 0});
        PathSampler sampler(kernel, law, alpha);
        for (std::size_t i = r.begin; i < r.end; ++i) {
          const auto p = sampler.sample(t, rng);
          const double v = std::abs(scale * p.V);
          const double h = scale * p.H;
          for (std::size_t k = 0; k < xs.size(); ++k) {
            c[k].first += (v > xs[k]);
            c[k].second += (h > xs[k]);
          }
        }
        return c;
      },
      [&](Counts& acc, const Counts& part) {
        if (acc.empty()) acc.assign(xs.size(), {0, 0});
        for (std::size_t k = 0; k < part.size(); ++k) {
          acc[k].first += part[k].first;
          acc[k].second += part[k].second;
        }
      });

  TailReport report;
  const double c0 = law.c0();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    TailEstimate e;
    e.t = t;
    e.x = xs[k];
    e.N = N;
    e.hits_V = counts.empty() ? 0 : counts[k].first;
    e.hits_H = counts.empty() ? 0 : counts[k].second;
    const auto pv = proportion(e.hits_V, N);
    const auto ph = proportion(e.hits_H, N);
    e.p_V = pv.p;
    e.se_V = pv.se;
    e.p_H = ph.p;
    e.se_H = ph.se;
    e.ratio_paper = std::pow(e.x, alpha) * e.p_V / c0;
    e.ratio_max = e.hits_H > 0 ? e.p_V / e.p_H : std::numeric_limits<double>::quiet_NaN();
    const double expected = static_cast<double>(N) * c0 * std::pow(e.x, -alpha);
    e.low_precision = expected < kMinExpectedHits;
    if (e.low_precision)
      report.warnings.push_back("x=" + std::to_string(e.x) +
                                ": expected hit count below 20, CI unreliable");
    report.rows.push_back(e);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Admissible threshold schedules

enum class Admissibility { admissible, inadmissible, unrestricted };

inline std::string_view to_string(Admissibility a) {
  switch (a) {
    case Admissibility::admissible: return "admissible";
    case Admissibility::inadmissible: return "inadmissible";
    case Admissibility::unrestricted: return "unrestricted";
  }
  return "?";
}

/// log h(t), finite for t > 0.
inline double log_h_of_t(const Regime& r, double t) {
  if (!(t > 0.0)) throw DomainError("log_h_of_t: t must be positive");
  const double k = -(2.0 * r.S_alpha + 1.0);
  switch (r.case_id) {
    case RegimeCase::unrestricted: return 0.0;
    case RegimeCase::decreasing_critical: return std::log(t);
    case RegimeCase::decreasing_subcritical: return k * t;
    case RegimeCase::increasing: return 2.0 * r.alpha * (r.mu_2alpha - r.mu_alpha) * t;
    case RegimeCase::flat_positive: return r.eta * t;
    case RegimeCase::flat_subcritical: return std::log(t) + k * t;
    case RegimeCase::flat_critical: return 2.0 * std::log(t);
    case RegimeCase::flat_moderate: return std::log(t);
  }
  return 0.0;
}

/// Checks x_t^{alpha - epsilon} / h(t) -> infinity with a finite witness:
/// g(t) = (alpha - epsilon) log x_t - log h(t) must increase strictly
/// across a 33-point grid on [horizon/2, horizon]. A longer horizon gives a
/// more trustworthy verdict.
inline Admissibility admissible_schedule(const Regime& regime, double epsilon, double horizon,
                                         const std::function<double(double)>& schedule) {
  if (!(epsilon > 0.0) || !(epsilon < regime.alpha))
    throw DomainError("admissible_schedule: epsilon must lie in (0, alpha)");
  if (!(horizon > 0.0)) throw DomainError("admissible_schedule: horizon must be positive");
  if (regime.case_id == RegimeCase::unrestricted) return Admissibility::unrestricted;

  constexpr int kPoints = 33;
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kPoints; ++i) {
    const double t = horizon * (0.5 + 0.5 * i / (kPoints - 1));
    const double x = schedule(t);
    if (!(x > 0.0)) return Admissibility::inadmissible;
    const double g = (regime.alpha - epsilon) * std::log(x) - log_h_of_t(regime, t);
    if (!(g > prev)) return Admissibility::inadmissible;
    prev = g;
  }
  return Admissibility::admissible;
}

// ---------------------------------------------------------------------------
// i.i.d. baseline

struct BaselineReport {
  std::size_t n = 0;
  double x = 0.0;
  std::size_t N = 0;
  double p_sum = 0.0;  ///< P{|n^{-1/a} sum X_i| > x}
  double se_sum = 0.0;
  double p_max = 0.0;  ///< P{n^{-1/a} max |X_i| > x}
  double se_max = 0.0;
  double ratio_sum_max = 0.0;  ///< p_sum / p_max
  double ratio_paper = 0.0;    ///< x^a p_sum / c0
  double single_jump = 0.0;    ///< x^a n P{|X_1| > n^{1/a} x} / c0, exact when known
};

inline BaselineReport iid_baseline(const InitialLaw& law, std::size_t n, double x, std::size_t N,
                                   const ChunkPlan& plan) {
  if (n == 0 || N == 0) throw DomainError("iid_baseline: n and N must be positive");
  if (!(x > 0.0)) throw DomainError("iid_baseline: x must be positive");
  const double a = law.alpha();
  const double threshold = std::pow(static_cast<double>(n), 1.0 / a) * x;
  using Counts = std::pair<std::size_t, std::size_t>;
  const Counts c = reduce_chunks(
      plan, N,
      [&](const ChunkRange& r, Stream& rng) {
        Counts local{0, 0};
        for (std::size_t i = r.begin; i < r.end; ++i) {
          double sum = 0.0, mx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double v = law.sample(rng);
            sum += v;
            mx = std::max(mx, std::abs(v));
          }
          local.first += (std::abs(sum) > threshold);
          local.second += (mx > threshold);
        }
        return local;
      },
      [](Counts& acc, const Counts& p) {
        acc.first += p.first;
        acc.second += p.second;
      });

  BaselineReport b;
  b.n = n;
  b.x = x;
  b.N = N;
  const auto ps = proportion(c.first, N);
  const auto pm = proportion(c.second, N);
  b.p_sum = ps.p;
  b.se_sum = ps.se;
  b.p_max = pm.p;
  b.se_max = pm.se;
  b.ratio_sum_max = c.second > 0 ? ps.p / pm.p : std::numeric_limits<double>::quiet_NaN();
  b.ratio_paper = std::pow(x, a) * ps.p / law.c0();
  if (auto tail = law.abs_tail(threshold))
    b.single_jump = std::pow(x, a) * static_cast<double>(n) * *tail / law.c0();
  else
    b.single_jump = std::numeric_limits<double>::quiet_NaN();
  return b;
}

// ---------------------------------------------------------------------------
// Finite-n bounds for S_n = sum_j b_j X_j

struct BoundsReport {
  std::size_t n = 0;
  std::vector<double> b;
  double x = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  double lower = 0.0;      ///< lower bound on x^a P{|S_n| > x}, unclamped
  double upper = 0.0;
  double max_lower = 0.0;  ///< bounds on x^a P{max_j |b_j X_j| > x}
  double max_upper = 0.0;
  double mc = 0.0;         ///< Monte Carlo x^a P{|S_n| > x}
  double mc_se = 0.0;
  double mc_max = 0.0;     ///< Monte Carlo x^a P{max_j |b_j X_j| > x}
  double mc_max_se = 0.0;
  double delta = 0.0;      ///< P{|S_n| + b(n)|X_1| <= epsilon x}, independent batch
  double delta_se = 0.0;
  double sum_b_alpha = 0.0;
  double b_max = 0.0;
  double K0 = 0.0;
  double K1 = 0.0;
};

struct BoundsTerms {
  double lower;
  double upper;
  double max_lower;
  double max_upper;
};

/// The analytic bounds for a given Delta value.
inline BoundsTerms lemma_bound_terms(double alpha, const TailProfile& tp, double sum_b_alpha,
                                     double b_max, double x, double epsilon, double gamma,
                                     double delta) {
  const double a = alpha;
  const double sa = sum_b_alpha;
  const double sa2 = sa * sa;
  const double K0 = tp.K0;
  BoundsTerms r{};
  r.lower = delta / std::pow(1.0 + epsilon, a) * tp.c0 *
                (1.0 - tp.Rbar(x * (1.0 + epsilon) / b_max)) * sa -
            K0 * K0 / (std::pow(x, a) * std::pow(1.0 + epsilon, 2.0 * a)) * sa2;
  r.upper = (tp.c0 / std::pow(1.0 - epsilon, a) * (1.0 + tp.Rbar(x * (1.0 - epsilon) / b_max)) +
             2.0 * K0 / (epsilon * epsilon * (2.0 - a) * std::pow(x, (2.0 - a) * (1.0 - gamma)))) *
                sa +
            (K0 * K0 / std::pow(x, a * (2.0 * gamma - 1.0)) +
             tp.K1 / (epsilon * epsilon * std::pow(x, 2.0 - a + 2.0 * (a - 1.0) * gamma))) *
                sa2;
  r.max_lower = tp.c0 * sa * (1.0 - tp.Rbar(x / b_max)) - K0 * K0 / std::pow(x, a) * sa2;
  r.max_upper = tp.c0 * sa * (1.0 + tp.Rbar(x / b_max));
  return r;
}

inline BoundsReport lemma_bounds(std::span<const double> b, const InitialLaw& law, double x,
                                 double epsilon, double gamma, std::size_t N,
                                 const ChunkPlan& plan) {
  if (b.empty()) throw DomainError("lemma_bounds: empty weight sequence");
  for (double w : b)
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("lemma_bounds: weights must be >= 0");
  const double b_max = *std::max_element(b.begin(), b.end());
  if (!(b_max > 0.0)) throw DomainError("lemma_bounds: weights are all zero");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("lemma_bounds: epsilon must lie in (0,1)");
  if (!(gamma > 0.0)) throw DomainError("lemma_bounds: gamma must be positive");
  if (!(x > 0.0)) throw DomainError("lemma_bounds: x must be positive");
  if (N == 0) throw DomainError("lemma_bounds: N must be positive");
  if (law.alpha() == 1.0 && law.c0_plus() != law.c0_minus())
    throw DomainError("lemma_bounds: alpha = 1 requires c0+ = c0-");
  if (law.alpha() > 1.0 && !law.centered())
    throw DomainError("lemma_bounds: alpha > 1 requires a centered law");

  const double a = law.alpha();
  const TailProfile tp = tail_profile(law);
  BoundsReport rep;
  rep.n = b.size();
  rep.b.assign(b.begin(), b.end());
  rep.x = x;
  rep.epsilon = epsilon;
  rep.gamma = gamma;
  rep.b_max = b_max;
  rep.K0 = tp.K0;
  rep.K1 = tp.K1;
  for (double w : b) rep.sum_b_alpha += pow0(w, a);

  using Counts = std::pair<std::size_t, std::size_t>;
  auto add = [](Counts& acc, const Counts& p) {
    acc.first += p.first;
    acc.second += p.second;
  };
  const Counts tail = reduce_chunks(
      plan.with_tag(plan.tag + "/tail"), N,
      [&](const ChunkRange& r, Stream& rng) {
        Counts c{0, 0};
        for (std::size_t i = r.begin; i < r.end; ++i) {
          double s = 0.0, mx = 0.0;
          for (double w : b) {
            const double term = w * law.sample(rng);
            s += term;
            mx = std::max(mx, std::abs(term));
          }
          c.first += (std::abs(s) > x);
          c.second += (mx > x);
        }
        return c;
      },
      add);
  const double y = epsilon * x;
  const Counts delta = reduce_chunks(
      plan.with_tag(plan.tag + "/delta"), N,
      [&](const ChunkRange& r, Stream& rng) {
        Counts c{0, 0};
        for (std::size_t i = r.begin; i < r.end; ++i) {
          double s = 0.0, first = 0.0;
          for (std::size_t j = 0; j < b.size(); ++j) {
            const double v = law.sample(rng);
            if (j == 0) first = v;
            s += b[j] * v;
          }
          c.first += (std::abs(s) + b_max * std::abs(first) <= y);
        }
        return c;
      },
      add);

  const double xa = std::pow(x, a);
  const auto pt = proportion(tail.first, N);
  const auto pm = proportion(tail.second, N);
  const auto pd = proportion(delta.first, N);
  rep.mc = xa * pt.p;
  rep.mc_se = xa * pt.se;
  rep.mc_max = xa * pm.p;
  rep.mc_max_se = xa * pm.se;
  rep.delta = pd.p;
  rep.delta_se = pd.se;
  const auto terms = lemma_bound_terms(a, tp, rep.sum_b_alpha, b_max, x, epsilon, gamma, pd.p);
  rep.lower = terms.lower;
  rep.upper = terms.upper;
  rep.max_lower = terms.max_lower;
  rep.max_upper = terms.max_upper;
  return rep;
}

// ---------------------------------------------------------------------------
// Kinetic equation of the max process

struct OdeResidual {
  double residual = 0.0;
  double se = 0.0;
  double time_derivative = 0.0;  ///< [F_{t+d}(x) - F_t(x)] / d
  double cdf = 0.0;              ///< F_t(x)
  double gain = 0.0;             ///< E[F_t(x/L) F_t(x/R)]
};

/// Residual of d/dt F_t(x) + F_t(x) - E[F_t(x/L) F_t(x/R)], F_t the CDF of
/// H_t, with F_t(x/0) = 0 for x < 0 and 1 otherwise.
///
/// H_t and H_{t+delta} come from the same trees (the tree at t is grown on
/// to t + delta), so the forward difference is estimated pathwise. The gain
/// term uses the empirical CDF of the H_t sample and N fresh collisions. The
/// reported SE combines the path-term SE, the collision-average SE and a
/// delta-method bound for the error of the empirical CDF.
inline OdeResidual max_ode_residual(const CollisionKernel& kernel, const InitialLaw& law, double t,
                                    double x, double delta, std::size_t N,
                                    const ChunkPlan& plan) {
  if (!(delta > 0.0 && delta <= 0.1)) throw DomainError("max_ode_residual: delta must lie in (0, 0.1]");
  if (x == 0.0) throw DomainError("max_ode_residual: x must be non-zero");
  if (!(t >= 0.0)) throw DomainError("max_ode_residual: t must be non-negative");
  if (N < 2) throw DomainError("max_ode_residual: N must be at least 2");

  struct Part {
    MeanAccumulator path;  // D / delta + I_t
    MeanAccumulator diff;  // D
    MeanAccumulator level; // I_t
    std::vector<double> heights;
  };
  auto parts = map_chunks(plan.with_tag(plan.tag + "/paths"), N,
                          [&](const ChunkRange& r, Stream& rng) {
                            Part p;
                            p.heights.reserve(r.size());
                            PathSampler sampler(kernel, law, law.alpha());
                            for (std::size_t i = r.begin; i < r.end; ++i) {
                              const auto now = sampler.sample(t, rng);
                              const auto later = sampler.extend(t + delta, delta, rng);
                              const double in_now = now.H <= x ? 1.0 : 0.0;
                              const double in_later = later.H <= x ? 1.0 : 0.0;
                              p.path.add((in_later - in_now) / delta + in_now);
                              p.diff.add(in_later - in_now);
                              p.level.add(in_now);
                              p.heights.push_back(now.H);
                            }
                            return p;
                          });
  MeanAccumulator path, diff, level;
  std::vector<double> heights;
  heights.reserve(N);
  for (auto& p : parts) {
    path.merge(p.path);
    diff.merge(p.diff);
    level.merge(p.level);
    heights.insert(heights.end(), p.heights.begin(), p.heights.end());
  }
  const EmpiricalCdf cdf(std::move(heights));
  const double n = static_cast<double>(N);

  auto at = [&](double scale) {
    if (scale == 0.0) return x < 0.0 ? 0.0 : 1.0;
    return cdf(x / scale);
  };
  struct GainPart {
    MeanAccumulator gain;
    double cdf_sd = 0.0;  // sum of delta-method sd contributions
  };
  auto gparts = map_chunks(plan.with_tag(plan.tag + "/gain"), N,
                           [&](const ChunkRange& r, Stream& rng) {
                             GainPart g;
                             for (std::size_t i = r.begin; i < r.end; ++i) {
                               const auto c = kernel.sample(rng);
                               const double fl = at(c.L);
                               const double fr = at(c.R);
                               g.gain.add(fl * fr);
                               const double sl = c.L == 0.0 ? 0.0 : std::sqrt(fl * (1.0 - fl) / n);
                               const double sr = c.R == 0.0 ? 0.0 : std::sqrt(fr * (1.0 - fr) / n);
                               g.cdf_sd += fr * sl + fl * sr;
                             }
                             return g;
                           });
  MeanAccumulator gain;
  double cdf_sd = 0.0;
  for (auto& g : gparts) {
    gain.merge(g.gain);
    cdf_sd += g.cdf_sd;
  }
  cdf_sd /= n;

  OdeResidual out;
  out.time_derivative = diff.mean / delta;
  out.cdf = level.mean;
  out.gain = gain.mean;
  out.residual = path.mean - gain.mean;
  const double se_path = path.std_error();
  const double se_gain = gain.std_error();
  out.se = std::sqrt(se_path * se_path + se_gain * se_gain + cdf_sd * cdf_sd);
  return out;
}

}  // namespace kacld

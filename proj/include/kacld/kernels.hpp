#pragma once

// Collision kernels (L, R), their spectral function
//
//   Q(s) = E[L^s + R^s] - 1,   mu(s) = Q(s) / s,
//
// and the classification of the large-deviation regime together with the
// growth function h(t) that constrains admissible thresholds x_t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kacld/error.hpp"
#include "kacld/random.hpp"
#include "kacld/stats.hpp"

namespace kacld {

struct Collision {
  double L;
  double R;
};

/// x^s with the convention 0^s = 0 for every s >= 0 (including s = 0).
inline double pow0(double x, double s) { return x == 0.0 ? 0.0 : std::pow(x, s); }

namespace kernel_kind {

struct Deterministic {
  double l;
  double r;
};

/// theta uniform on [0, 2pi), L = |sin theta|, R = |cos theta|.
struct Kac {};

struct Atom {
  double l;
  double r;
  double p;
};

struct Mixture {
  std::vector<Atom> atoms;
  std::vector<double> cumulative;  // running sums of p, last entry 1
};

struct Custom {
  std::function<Collision(Stream&)> sampler;
  /// Optional closed form of s -> E[L^s + R^s]; may return +inf.
  std::function<double(double)> moment;
  std::string name;
};

}  // namespace kernel_kind

class CollisionKernel {
 public:
  using Kind = std::variant<kernel_kind::Deterministic, kernel_kind::Kac,
                            kernel_kind::Mixture, kernel_kind::Custom>;

  static CollisionKernel deterministic(double l, double r) {
    if (!(l >= 0.0) || !(r >= 0.0) || !std::isfinite(l) || !std::isfinite(r))
      throw DomainError("deterministic kernel needs finite l, r >= 0");
    if (!(l > 0.0 && r > 0.0))
      throw DomainError("kernel must satisfy P{L>0} + P{R>0} > 1");
    return CollisionKernel(kernel_kind::Deterministic{l, r});
  }

  static CollisionKernel kac() { return CollisionKernel(kernel_kind::Kac{}); }

  static CollisionKernel mixture(std::vector<kernel_kind::Atom> atoms) {
    if (atoms.empty()) throw DomainError("mixture kernel needs at least one atom");
    double total = 0.0;
    double positive_mass = 0.0;
    for (const auto& a : atoms) {
      if (!(a.p > 0.0)) throw DomainError("mixture probabilities must be positive");
      if (!(a.l >= 0.0) || !(a.r >= 0.0) || !std::isfinite(a.l) || !std::isfinite(a.r))
        throw DomainError("mixture atoms need finite l, r >= 0");
      total += a.p;
      positive_mass += a.p * ((a.l > 0.0 ? 1.0 : 0.0) + (a.r > 0.0 ? 1.0 : 0.0));
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw DomainError("mixture probabilities must sum to 1");
    if (!(positive_mass > 1.0 + 1e-12))
      throw DomainError("kernel must satisfy P{L>0} + P{R>0} > 1");
    kernel_kind::Mixture m{std::move(atoms), {}};
    m.cumulative.reserve(m.atoms.size());
    double acc = 0.0;
    for (const auto& a : m.atoms) m.cumulative.push_back(acc += a.p / total);
    m.cumulative.back() = 1.0;
    return CollisionKernel(std::move(m));
  }

  /// The caller guarantees L, R >= 0 and P{L>0} + P{R>0} > 1; only the
  /// sign of each draw is checked (in debug builds).
  static CollisionKernel custom(std::function<Collision(Stream&)> sampler,
                                std::function<double(double)> moment = {},
                                std::string name = "custom") {
    if (!sampler) throw DomainError("custom kernel needs a sampler");
    return CollisionKernel(
        kernel_kind::Custom{std::move(sampler), std::move(moment), std::move(name)});
  }

  const Kind& kind() const { return kind_; }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kernel_kind::Deterministic>) return "deterministic";
          else if constexpr (std::is_same_v<K, kernel_kind::Kac>) return "kac";
          else if constexpr (std::is_same_v<K, kernel_kind::Mixture>) return "mixture";
          else return k.name;
        },
        kind_);
  }

  Collision sample(Stream& rng) const {
    return std::visit(
        [&rng](const auto& k) -> Collision {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kernel_kind::Deterministic>) {
            return {k.l, k.r};
          } else if constexpr (std::is_same_v<K, kernel_kind::Kac>) {
            const double theta = rng.angle();
            return {std::abs(std::sin(theta)), std::abs(std::cos(theta))};
          } else if constexpr (std::is_same_v<K, kernel_kind::Mixture>) {
            const double u = rng.uniform();
            auto it = std::lower_bound(k.cumulative.begin(), k.cumulative.end(), u);
            if (it == k.cumulative.end()) --it;
            const auto& a = k.atoms[static_cast<std::size_t>(it - k.cumulative.begin())];
            return {a.l, a.r};
          } else {
            return k.sampler(rng);
          }
        },
        kind_);
  }

  /// E[L^s + R^s] when a closed form is known.
  std::optional<double> exact_moment(double s) const {
    return std::visit(
        [s](const auto& k) -> std::optional<double> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kernel_kind::Deterministic>) {
            return pow0(k.l, s) + pow0(k.r, s);
          } else if constexpr (std::is_same_v<K, kernel_kind::Kac>) {
            // E|sin|^s = E|cos|^s = Gamma((s+1)/2) / (sqrt(pi) Gamma(s/2+1))
            return 2.0 * std::exp(std::lgamma(0.5 * (s + 1.0)) -
                                  std::lgamma(0.5 * s + 1.0)) /
                   std::sqrt(std::numbers::pi);
          } else if constexpr (std::is_same_v<K, kernel_kind::Mixture>) {
            double e = 0.0;
            for (const auto& a : k.atoms) e += a.p * (pow0(a.l, s) + pow0(a.r, s));
            return e;
          } else {
            if (k.moment) return k.moment(s);
            return std::nullopt;
          }
        },
        kind_);
  }

  bool is_kac() const { return std::holds_alternative<kernel_kind::Kac>(kind_); }

 private:
  explicit CollisionKernel(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

inline Collision sample_collision(const CollisionKernel& kernel, Stream& rng) {
  return kernel.sample(rng);
}

// ---------------------------------------------------------------------------
// Spectral function

enum class SpectralMethod { closed_form, quadrature, monte_carlo };

inline std::string_view to_string(SpectralMethod m) {
  switch (m) {
    case SpectralMethod::closed_form: return "closed-form";
    case SpectralMethod::quadrature: return "quadrature";
    case SpectralMethod::monte_carlo: return "monte-carlo";
  }
  return "?";
}

struct SpectralReport {
  double s = 0.0;
  double Q = 0.0;   ///< E[L^s + R^s] - 1, +inf when the moment diverges
  double mu = 0.0;  ///< Q / s
  SpectralMethod method = SpectralMethod::closed_form;
  double std_error = 0.0;

  bool infinite() const { return std::isinf(Q); }
};

struct SpectralOptions {
  /// Monte Carlo sample count, or Gauss-Kronrod refinement depth for quadrature.
  std::size_t budget = 1'000'000;
  /// Force a method; by default a closed form is used whenever available.
  std::optional<SpectralMethod> method;
};

namespace detail {

inline SpectralReport make_report(double s, double moment, SpectralMethod m, double se) {
  SpectralReport r;
  r.s = s;
  r.method = m;
  if (!std::isfinite(moment)) {
    r.Q = std::numeric_limits<double>::infinity();
    r.mu = r.Q;
    r.std_error = 0.0;
    return r;
  }
  r.Q = moment - 1.0;
  r.mu = r.Q / s;
  r.std_error = se;
  return r;
}

inline double kac_moment_quadrature(double s, std::size_t depth) {
  // E[|sin|^s + |cos|^s] = (4/pi) * int_0^{pi/2} sin(theta)^s dtheta
  auto f = [s](double theta) { return pow0(std::sin(theta), s); };
  const unsigned max_depth = static_cast<unsigned>(std::clamp<std::size_t>(depth, 5, 30));
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numbers::pi / 2.0, max_depth, 1e-14);
  return 4.0 / std::numbers::pi * integral;
}

}  // namespace detail

/// Spectral data from a closed form (deterministic, kac, mixture, or a
/// custom kernel carrying a moment function). Throws Unsupported otherwise.
inline SpectralReport spectral(const CollisionKernel& kernel, double s) {
  if (!(s > 0.0)) throw DomainError("spectral: s must be positive");
  auto m = kernel.exact_moment(s);
  if (!m) throw Unsupported("spectral: kernel has no closed-form moments; pass a stream");
  return detail::make_report(s, *m, SpectralMethod::closed_form, 0.0);
}

/// Spectral data, falling back to Monte Carlo (or quadrature when requested
/// for the kac kernel). A Monte Carlo run whose running sum overflows, or in
/// which a single draw carries more than half of the total, is reported as a
/// divergent moment (+inf).
inline SpectralReport spectral(const CollisionKernel& kernel, double s, Stream& rng,
                               SpectralOptions opts = {}) {
  if (!(s > 0.0)) throw DomainError("spectral: s must be positive");
  const auto exact = kernel.exact_moment(s);
  SpectralMethod method = opts.method.value_or(
      exact ? SpectralMethod::closed_form : SpectralMethod::monte_carlo);

  if (method == SpectralMethod::closed_form) {
    if (!exact) throw Unsupported("spectral: no closed form for this kernel");
    return detail::make_report(s, *exact, method, 0.0);
  }
  if (method == SpectralMethod::quadrature) {
    if (!kernel.is_kac()) throw Unsupported("spectral: quadrature is only defined for the kac kernel");
    return detail::make_report(s, detail::kac_moment_quadrature(s, opts.budget), method, 0.0);
  }

  if (opts.budget < 1000) throw DomainError("spectral: Monte Carlo budget must be >= 1000");
  MeanAccumulator acc;
  double total = 0.0;
  double largest = 0.0;
  for (std::size_t i = 0; i < opts.budget; ++i) {
    const auto c = kernel.sample(rng);
    const double v = pow0(c.L, s) + pow0(c.R, s);
    acc.add(v);
    total += v;
    largest = std::max(largest, v);
  }
  if (!std::isfinite(total) || largest > 0.5 * total)
    return detail::make_report(s, std::numeric_limits<double>::infinity(), method, 0.0);
  return detail::make_report(s, acc.mean, method, acc.std_error());
}

// ---------------------------------------------------------------------------
// Large-deviation regimes

/// One row of the h(t) table, plus the unrestricted case in which any
/// threshold x_t -> infinity is admissible.
enum class RegimeCase {
  unrestricted,           ///< mu(2a) < mu(a), 2S(a) > -1
  decreasing_critical,    ///< mu(2a) < mu(a), 2S(a) = -1        h = t
  decreasing_subcritical, ///< mu(2a) < mu(a), 2S(a) < -1        h = exp(-(2S+1)t)
  increasing,             ///< mu(2a) > mu(a)                    h = exp(2a(mu(2a)-mu(a))t)
  flat_positive,          ///< mu(2a) = mu(a), S(a) > 0          h = exp(eta t)
  flat_subcritical,       ///< mu(2a) = mu(a), 2S(a) < -1        h = t exp(-(2S+1)t)
  flat_critical,          ///< mu(2a) = mu(a), 2S(a) = -1        h = t^2
  flat_moderate,          ///< mu(2a) = mu(a), -1 < 2S(a) <= 0   h = t
};

inline std::string_view to_string(RegimeCase c) {
  switch (c) {
    case RegimeCase::unrestricted: return "unrestricted";
    case RegimeCase::decreasing_critical: return "mu2a<mu_a,2S=-1";
    case RegimeCase::decreasing_subcritical: return "mu2a<mu_a,2S<-1";
    case RegimeCase::increasing: return "mu2a>mu_a";
    case RegimeCase::flat_positive: return "mu2a=mu_a,S>0";
    case RegimeCase::flat_subcritical: return "mu2a=mu_a,2S<-1";
    case RegimeCase::flat_critical: return "mu2a=mu_a,2S=-1";
    case RegimeCase::flat_moderate: return "mu2a=mu_a,-1<2S<=0";
  }
  return "?";
}

struct Regime {
  double alpha = 0.0;
  double S_alpha = 0.0;
  double S_2alpha = 0.0;
  double mu_alpha = 0.0;
  double mu_2alpha = 0.0;
  RegimeCase case_id = RegimeCase::unrestricted;
  double eta = 0.1;  ///< only used by RegimeCase::flat_positive
};

inline constexpr double kDefaultRegimeTol = 1e-9;

namespace detail {
inline bool nearly_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Classifies from precomputed spectral values at alpha and 2 alpha.
inline Regime classify_regime(const SpectralReport& at_alpha, const SpectralReport& at_2alpha,
                              double alpha, double eta = 0.1,
                              double tol = kDefaultRegimeTol) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (at_2alpha.infinite())
    throw RegimeUnavailable("E[L^{2 alpha} + R^{2 alpha}] is infinite");
  if (at_alpha.infinite()) throw RegimeUnavailable("E[L^alpha + R^alpha] is infinite");

  Regime r;
  r.alpha = alpha;
  r.eta = eta;
  r.S_alpha = at_alpha.Q;
  r.S_2alpha = at_2alpha.Q;
  r.mu_alpha = r.S_alpha / alpha;
  r.mu_2alpha = r.S_2alpha / (2.0 * alpha);

  const double twoS = 2.0 * r.S_alpha;
  const bool flat = detail::nearly_equal(r.mu_2alpha, r.mu_alpha, tol);
  const bool at_minus_one = detail::nearly_equal(twoS, -1.0, tol);
  const bool at_zero = detail::nearly_equal(twoS, 0.0, tol);

  if (flat) {
    if (at_minus_one) r.case_id = RegimeCase::flat_critical;
    else if (twoS < -1.0) r.case_id = RegimeCase::flat_subcritical;
    else if (at_zero || twoS < 0.0) r.case_id = RegimeCase::flat_moderate;
    else r.case_id = RegimeCase::flat_positive;
  } else if (r.mu_2alpha > r.mu_alpha) {
    r.case_id = RegimeCase::increasing;
  } else {
    if (at_minus_one) r.case_id = RegimeCase::decreasing_critical;
    else if (twoS < -1.0) r.case_id = RegimeCase::decreasing_subcritical;
    else r.case_id = RegimeCase::unrestricted;
  }
  return r;
}

/// Classifies a kernel with closed-form moments.
inline Regime classify_regime(const CollisionKernel& kernel, double alpha, double eta = 0.1,
                              double tol = kDefaultRegimeTol) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  return classify_regime(spectral(kernel, alpha), spectral(kernel, 2.0 * alpha), alpha, eta, tol);
}

/// Classifies any kernel, estimating moments by Monte Carlo when needed.
inline Regime classify_regime(const CollisionKernel& kernel, double alpha, Stream& rng,
                              SpectralOptions opts, double eta = 0.1,
                              double tol = kDefaultRegimeTol) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  const auto a = spectral(kernel, alpha, rng, opts);
  const auto b = spectral(kernel, 2.0 * alpha, rng, opts);
  return classify_regime(a, b, alpha, eta, tol);
}

/// Growth function h(t). The unrestricted regime has no growth constraint
/// and evaluates to 1.
inline double h_of_t(const Regime& r, double t) {
  if (!(t >= 0.0)) throw DomainError("h_of_t: t must be non-negative");
  const double a = r.alpha;
  const double k = -(2.0 * r.S_alpha + 1.0);
  switch (r.case_id) {
    case RegimeCase::unrestricted: return 1.0;
    case RegimeCase::decreasing_critical: return t;
    case RegimeCase::decreasing_subcritical: return std::exp(k * t);
    case RegimeCase::increasing: return std::exp(2.0 * a * (r.mu_2alpha - r.mu_alpha) * t);
    case RegimeCase::flat_positive: return std::exp(r.eta * t);
    case RegimeCase::flat_subcritical: return t * std::exp(k * t);
    case RegimeCase::flat_critical: return t * t;
    case RegimeCase::flat_moderate: return t;
  }
  return 1.0;
}

}  // namespace kacld

#pragma once

// Initial laws F_0 in the domain of normal attraction of an alpha-stable
// law, with the tail metadata consumed by the deviation bounds:
//
//   P{|X| > x} = c0 x^{-alpha} (1 + R(x)),   Rbar(x) = sup_{y >= x} |R(y)|,
//   K0 = c0 (||R||_inf + 1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kacld/error.hpp"
#include "kacld/random.hpp"

namespace kacld {

namespace law_kind {

/// sign * Y - shift, Y Pareto(alpha) on [xmin, inf), P{sign = +1} = p_plus.
struct Pareto {
  double p_plus = 0.5;
  double xmin = 1.0;
  double shift = 0.0;
  bool symmetric = true;
};

/// A law supplied by the caller. Tail constants are declared, never inferred.
struct User {
  std::function<double(Stream&)> sampler;
  /// x -> P{|X| > x}; needed by tail_remainder.
  std::function<double(double)> abs_tail;
  /// Non-increasing envelope of |R|; needed by tail_profile.
  std::function<double(double)> envelope;
  /// sup_{x>0} |R(x)|; needed by tail_profile.
  std::optional<double> remainder_sup;
  /// sup_R |int_{(-R,R)} y dF_0 - gamma0|; needed by tail_profile when alpha = 1.
  std::optional<double> truncated_mean_sup;
  std::string name = "user";
};

}  // namespace law_kind

struct UserLawSpec {
  double alpha = 1.5;
  double c_plus = 0.5;
  double c_minus = 0.5;
  double gamma0 = 0.0;
  bool centered = true;
  law_kind::User law;
};

class InitialLaw {
 public:
  using Kind = std::variant<law_kind::Pareto, law_kind::User>;

  /// X = sign * xmin * U^{-1/alpha}, fair sign. c0 = xmin^alpha.
  static InitialLaw symmetric_pareto(double alpha, double xmin = 1.0) {
    check_alpha(alpha);
    if (!(xmin > 0.0) || !std::isfinite(xmin)) throw DomainError("xmin must be positive");
    const double c = std::pow(xmin, alpha);
    InitialLaw law(law_kind::Pareto{0.5, xmin, 0.0, true}, alpha, 0.5 * c, 0.5 * c, 0.0);
    return law;
  }

  /// Tail constants are exactly (c_plus, c_minus): the magnitude is Pareto
  /// with xmin = (c_plus + c_minus)^{1/alpha} and the sign is +1 with
  /// probability c_plus / (c_plus + c_minus). For alpha > 1 the draw is
  /// shifted by its closed-form mean so the law is centered. A supplied xmin
  /// must agree with c_plus + c_minus.
  static InitialLaw asymmetric_pareto(double alpha, double c_plus, double c_minus,
                                      std::optional<double> xmin = std::nullopt) {
    check_alpha(alpha);
    if (!(c_plus >= 0.0) || !(c_minus >= 0.0) || !(c_plus + c_minus > 0.0))
      throw DomainError("tail constants must be non-negative with positive sum");
    if (alpha == 1.0 && c_plus != c_minus)
      throw DomainError("alpha = 1 requires c0+ = c0-");
    const double c0 = c_plus + c_minus;
    const double derived_xmin = std::pow(c0, 1.0 / alpha);
    if (xmin && std::abs(*xmin - derived_xmin) > 1e-9 * derived_xmin)
      throw DomainError("xmin must equal (c0+ + c0-)^{1/alpha}");
    const double p_plus = c_plus / c0;
    double shift = 0.0;
    if (alpha > 1.0) shift = (2.0 * p_plus - 1.0) * alpha * derived_xmin / (alpha - 1.0);
    return InitialLaw(law_kind::Pareto{p_plus, derived_xmin, shift, c_plus == c_minus},
                      alpha, c_plus, c_minus, 0.0);
  }

  static InitialLaw user(UserLawSpec spec) {
    check_alpha(spec.alpha);
    if (!spec.law.sampler) throw DomainError("user law needs a sampler");
    if (!(spec.c_plus >= 0.0) || !(spec.c_minus >= 0.0) || !(spec.c_plus + spec.c_minus > 0.0))
      throw DomainError("tail constants must be non-negative with positive sum");
    if (spec.alpha == 1.0 && spec.c_plus != spec.c_minus)
      throw DomainError("alpha = 1 requires c0+ = c0-");
    if (spec.alpha == 1.0 && !std::isfinite(spec.gamma0))
      throw DomainError("alpha = 1 requires a finite gamma0");
    if (spec.alpha > 1.0 && !spec.centered)
      throw DomainError("alpha > 1 requires a centered law");
    return InitialLaw(std::move(spec.law), spec.alpha, spec.c_plus, spec.c_minus, spec.gamma0);
  }

  double alpha() const { return alpha_; }
  double c0_plus() const { return c_plus_; }
  double c0_minus() const { return c_minus_; }
  double c0() const { return c_plus_ + c_minus_; }
  double gamma0() const { return gamma0_; }
  /// Mean zero; required (and enforced) when alpha > 1.
  bool centered() const { return alpha_ > 1.0 || symmetric(); }
  const Kind& kind() const { return kind_; }

  bool symmetric() const {
    if (auto p = std::get_if<law_kind::Pareto>(&kind_)) return p->symmetric;
    return false;
  }

  std::string name() const {
    if (auto p = std::get_if<law_kind::Pareto>(&kind_))
      return p->symmetric && p->shift == 0.0 ? "symmetric-pareto" : "asymmetric-pareto";
    return std::get<law_kind::User>(kind_).name;
  }

  double sample(Stream& rng) const {
    if (auto p = std::get_if<law_kind::Pareto>(&kind_)) {
      const std::uint64_t word = rng.bits();
      const double u = (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
      const double y = p->xmin * pareto_quantile(u);
      double sign;
      if (p->symmetric) {
        sign = (word & 1u) ? -1.0 : 1.0;
      } else {
        sign = rng.uniform() < p->p_plus ? 1.0 : -1.0;
      }
      return sign * y - p->shift;
    }
    return std::get<law_kind::User>(kind_).sampler(rng);
  }

  /// P{|X| > x}, when known.
  std::optional<double> abs_tail(double x) const {
    if (auto p = std::get_if<law_kind::Pareto>(&kind_)) return pareto_abs_tail(*p, x);
    const auto& u = std::get<law_kind::User>(kind_);
    if (u.abs_tail) return u.abs_tail(x);
    return std::nullopt;
  }

 private:
  InitialLaw(Kind kind, double alpha, double c_plus, double c_minus, double gamma0)
      : kind_(std::move(kind)), alpha_(alpha), c_plus_(c_plus), c_minus_(c_minus),
        gamma0_(gamma0) {}

  // u^{-1/alpha}
  double pareto_quantile(double u) const {
    if (alpha_ == 0.5) return 1.0 / (u * u);
    if (alpha_ == 1.0) return 1.0 / u;
    return std::pow(u, -1.0 / alpha_);
  }

  static void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  }

  double pareto_abs_tail(const law_kind::Pareto& p, double x) const {
    if (x < 0.0) return 1.0;
    // survival and cdf of the magnitude Y
    auto sf = [&](double y) { return y <= p.xmin ? 1.0 : std::pow(p.xmin / y, alpha_); };
    auto cdf = [&](double y) { return 1.0 - sf(y); };
    const double m = p.shift;
    const double p_minus = 1.0 - p.p_plus;
    // X = s Y - m
    const double above = p.p_plus * sf(x + m) + p_minus * cdf(-x - m);
    const double below = p.p_plus * cdf(m - x) + p_minus * sf(x - m);
    return std::clamp(above + below, 0.0, 1.0);
  }

  Kind kind_;
  double alpha_;
  double c_plus_;
  double c_minus_;
  double gamma0_;
};

inline double sample_initial(const InitialLaw& law, Stream& rng) { return law.sample(rng); }

/// R(x) = x^alpha P{|X| > x} / c0 - 1.
inline double tail_remainder(const InitialLaw& law, double x) {
  if (!(x > 0.0)) throw DomainError("tail_remainder: x must be positive");
  auto tail = law.abs_tail(x);
  if (!tail) throw Unsupported("tail_remainder: law does not declare P{|X| > x}");
  return std::pow(x, law.alpha()) * *tail / law.c0() - 1.0;
}

struct TailProfile {
  double c0 = 0.0;
  double K0 = 0.0;
  double K1 = 0.0;
  double remainder_sup = 0.0;  ///< ||R||_inf
  std::function<double(double)> envelope;  ///< Rbar

  double Rbar(double x) const { return envelope(x); }
};

namespace detail {

// Envelope for a shifted Pareto law: running suffix maxima of |R| on a fixed
// logarithmic grid, inflated by 1% to cover the gaps between nodes.
struct GridEnvelope {
  std::vector<double> nodes;
  std::vector<double> suffix_max;
  std::function<double(double)> remainder;

  double operator()(double x) const {
    if (!(x > 0.0)) x = nodes.front();
    double v = std::abs(remainder(x));
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    if (it != nodes.end())
      v = std::max(v, suffix_max[static_cast<std::size_t>(it - nodes.begin())]);
    return 1.01 * v;
  }
};

inline GridEnvelope make_grid_envelope(const InitialLaw& law, double scale) {
  GridEnvelope g;
  g.remainder = [law](double x) { return tail_remainder(law, x); };
  const int per_decade = 400;
  for (int k = -8 * per_decade; k <= 10 * per_decade; ++k)
    g.nodes.push_back(scale * std::pow(10.0, static_cast<double>(k) / per_decade));
  g.suffix_max.resize(g.nodes.size());
  double m = 0.0;
  for (std::size_t i = g.nodes.size(); i-- > 0;) {
    m = std::max(m, std::abs(g.remainder(g.nodes[i])));
    g.suffix_max[i] = m;
  }
  return g;
}

inline double k1_constant(double alpha, double K0, double gamma0, double truncated_sup) {
  if (alpha < 1.0) return K0 * K0 / ((1.0 - alpha) * (1.0 - alpha));
  if (alpha > 1.0) return K0 * K0 * alpha * alpha / ((1.0 - alpha) * (1.0 - alpha));
  const double v = gamma0 + truncated_sup;
  return v * v;
}

}  // namespace detail

inline TailProfile tail_profile(const InitialLaw& law) {
  TailProfile tp;
  tp.c0 = law.c0();
  const double a = law.alpha();

  if (auto p = std::get_if<law_kind::Pareto>(&law.kind())) {
    if (p->shift == 0.0) {
      // R(x) = (x/xmin)^a - 1 below xmin, 0 above; sup |R| = 1 as x -> 0.
      const double xmin = p->xmin;
      tp.remainder_sup = 1.0;
      tp.envelope = [xmin, a](double x) {
        return x < xmin ? 1.0 - std::pow(std::max(x, 0.0) / xmin, a) : 0.0;
      };
    } else {
      auto grid = detail::make_grid_envelope(law, p->xmin);
      tp.remainder_sup = std::max(1.0, 1.01 * grid.suffix_max.front());
      tp.envelope = std::move(grid);
    }
    tp.K0 = tp.c0 * (tp.remainder_sup + 1.0);
    // catalog laws at alpha = 1 are symmetric: every truncated mean is 0
    tp.K1 = detail::k1_constant(a, tp.K0, law.gamma0(), 0.0);
    return tp;
  }

  const auto& u = std::get<law_kind::User>(law.kind());
  if (!u.envelope || !u.remainder_sup)
    throw Unsupported("tail_profile: user law must declare Rbar and ||R||_inf");
  if (a == 1.0 && !u.truncated_mean_sup)
    throw Unsupported("tail_profile: alpha = 1 user law must declare the truncated-mean deviation");
  tp.remainder_sup = *u.remainder_sup;
  tp.envelope = u.envelope;
  tp.K0 = tp.c0 * (tp.remainder_sup + 1.0);
  tp.K1 = detail::k1_constant(a, tp.K0, law.gamma0(), u.truncated_mean_sup.value_or(0.0));
  return tp;
}

/// int_{(-r, r)} x dF_0(x) for catalog laws.
inline double truncated_mean(const InitialLaw& law, double r) {
  auto p = std::get_if<law_kind::Pareto>(&law.kind());
  if (!p) throw Unsupported("truncated_mean: only defined for catalog laws");
  if (!(r > 0.0)) return 0.0;
  const double a = law.alpha();
  // E[Y 1{Y < y}] for Y Pareto(a, xmin)
  auto partial = [&](double y) {
    if (y <= p->xmin) return 0.0;
    if (a == 1.0) return p->xmin * std::log(y / p->xmin);
    return a * p->xmin / (a - 1.0) * (1.0 - std::pow(p->xmin / y, a - 1.0));
  };
  const double m = p->shift;
  const double q = 1.0 - p->p_plus;
  // X = Y - m on the + branch, X = -Y - m on the - branch; |X| < r
  auto branch_plus = [&]() {
    const double lo = std::max(p->xmin, m - r);
    const double hi = m + r;
    if (hi <= lo) return 0.0;
    const double mass = std::pow(p->xmin / lo, a) - (hi > p->xmin ? std::pow(p->xmin / hi, a) : 1.0);
    return (partial(hi) - partial(lo)) - m * mass;
  };
  auto branch_minus = [&]() {
    const double lo = std::max(p->xmin, -m - r);
    const double hi = r - m;
    if (hi <= lo) return 0.0;
    const double mass = std::pow(p->xmin / lo, a) - (hi > p->xmin ? std::pow(p->xmin / hi, a) : 1.0);
    return -(partial(hi) - partial(lo)) - m * mass;
  };
  return p->p_plus * branch_plus() + q * branch_minus();
}

}  // namespace kacld

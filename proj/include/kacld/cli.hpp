#pragma once

// Experiment configuration and orchestration behind the `kacld` command.
//
// A configuration is a single JSON document; see samples/ and README.md for
// the full grammar. parse_config validates everything up front and reports
// every problem it finds. run() executes an experiment and returns a table
// plus metadata; write_outputs() serializes it. Output is a pure function
// of the document: all randomness flows from `seed` through per-chunk
// streams, so the worker count never changes a byte of the CSV.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacld/deviations.hpp"
#include "kacld/initial_data.hpp"
#include "kacld/kernels.hpp"
#include "kacld/limits.hpp"
#include "kacld/parallel.hpp"
#include "kacld/processes.hpp"
#include "kacld/weights.hpp"

namespace kacld::cli {

using json = nlohmann::json;

/// All validation problems of a configuration document.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : Error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& m : e) s += (s.empty() ? "" : "; ") + m;
    return s;
  }
  std::vector<std::string> errors_;
};

enum ExitCode : int { kOk = 0, kConfigError = 2, kWarning = 3, kIoError = 4 };

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"tail",   "cdf-H",   "cf-V",         "fixed-point",
                                              "bounds", "baseline", "ode-residual", "martingale"};
  return names;
}

struct KernelSpec {
  std::string kind = "kac";
  double l = 0.0;
  double r = 0.0;
  std::vector<kernel_kind::Atom> atoms;
};

struct InitialSpec {
  std::string kind = "symmetric-pareto";
  double alpha = 1.5;
  double c_plus = 0.5;
  double c_minus = 0.5;
  std::optional<double> xmin;
  double gamma0 = 0.0;
};

/// x_t = exp(rate t) or t^rate, used to check threshold admissibility.
struct ScheduleSpec {
  std::string kind;
  double rate = 1.0;
  double horizon = 100.0;
};

struct ExperimentConfig {
  KernelSpec kernel;
  InitialSpec initial;
  std::string experiment;
  std::vector<double> t;
  std::vector<double> xs;
  std::vector<double> xi;
  std::vector<std::size_t> n;
  std::vector<double> b;
  std::size_t N = 100000;
  std::size_t pool_size = 100000;
  std::size_t iterations = 60;
  std::size_t burn_in = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t chunk_size = 10000;
  double epsilon = 0.5;
  double gamma = 0.75;
  double eta = 0.1;
  double tol = kDefaultRegimeTol;
  double delta = 0.01;
  std::optional<ScheduleSpec> schedule;
  std::string output_path;
  std::string output_format = "csv";
  std::string pool_output;
  json source;  ///< the validated document, echoed into the metadata

  ChunkPlan plan(const std::string& tag) const {
    return ChunkPlan{seed, experiment + "/" + tag, chunk_size, workers};
  }
};

inline CollisionKernel make_kernel(const KernelSpec& k) {
  if (k.kind == "kac") return CollisionKernel::kac();
  if (k.kind == "deterministic") return CollisionKernel::deterministic(k.l, k.r);
  if (k.kind == "mixture") return CollisionKernel::mixture(k.atoms);
  throw DomainError("unknown kernel kind '" + k.kind + "'");
}

inline InitialLaw make_law(const InitialSpec& s) {
  if (s.kind == "symmetric-pareto") return InitialLaw::symmetric_pareto(s.alpha, s.xmin.value_or(1.0));
  if (s.kind == "asymmetric-pareto")
    return InitialLaw::asymmetric_pareto(s.alpha, s.c_plus, s.c_minus, s.xmin);
  throw DomainError("unknown initial kind '" + s.kind + "'");
}

// ---------------------------------------------------------------------------
// Parsing

/// Sets a dotted path such as "kernel.l" or "N" to a value. The value is
/// read as JSON when it parses, as a plain string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError({"override '" + assignment + "' is not KEY=VALUE"});
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError({"override key '" + key + "' is malformed"});
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  template <typename T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(where + key + ": wrong type");
      return std::nullopt;
    }
  }

  std::vector<double> reals(const json& obj, const std::string& key) {
    if (!obj.contains(key)) return {};
    const auto& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array()) {
      std::vector<double> out;
      for (const auto& e : v) {
        if (!e.is_number()) {
          errors_.push_back(key + ": every entry must be a number");
          return {};
        }
        out.push_back(e.get<double>());
      }
      return out;
    }
    errors_.push_back(key + ": expected a number or a list of numbers");
    return {};
  }

  std::vector<std::size_t> counts(const json& obj, const std::string& key) {
    std::vector<std::size_t> out;
    for (double v : reals(obj, key)) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        errors_.push_back(key + ": entries must be positive integers");
        return {};
      }
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  }

  std::optional<std::size_t> count(const json& obj, const std::string& key) {
    auto v = get<double>(obj, key, "");
    if (!v) return std::nullopt;
    if (!(*v >= 1.0) || *v != std::floor(*v) || *v > 1e15) {
      errors_.push_back(key + ": must be a positive integer");
      return std::nullopt;
    }
    return static_cast<std::size_t>(*v);
  }

 private:
  std::vector<std::string>& errors_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  detail::Reader rd(errors);
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});
  c.source = doc;

  static const std::set<std::string> known{
      "kernel", "initial", "experiment", "t", "xs", "xi", "n", "b", "N", "pool_size",
      "iterations", "burn_in", "seed", "workers", "chunk_size", "epsilon", "gamma", "eta",
      "tol", "delta", "schedule", "output"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) errors.push_back("unknown key '" + it.key() + "'");

  // experiment
  if (auto e = rd.get<std::string>(doc, "experiment", "")) {
    c.experiment = *e;
    bool ok = false;
    for (const auto& n : experiment_names()) ok |= (n == *e);
    if (!ok) errors.push_back("experiment: unknown kind '" + *e + "'");
  } else {
    errors.push_back("experiment: missing");
  }

  // seed: required, no ambient entropy
  if (!doc.contains("seed")) {
    errors.push_back("seed: missing (every run must be reproducible from the document)");
  } else if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
    errors.push_back("seed: must be an integer");
  } else {
    c.seed = doc.at("seed").is_number_unsigned() ? doc.at("seed").get<std::uint64_t>()
                                                 : static_cast<std::uint64_t>(doc.at("seed").get<std::int64_t>());
  }

  // kernel
  if (!doc.contains("kernel") || !doc.at("kernel").is_object()) {
    errors.push_back("kernel: missing block");
  } else {
    const auto& k = doc.at("kernel");
    c.kernel.kind = rd.get<std::string>(k, "kind", "kernel.").value_or("");
    if (c.kernel.kind == "deterministic") {
      auto l = rd.get<double>(k, "l", "kernel.");
      auto r = rd.get<double>(k, "r", "kernel.");
      if (!l || !r) errors.push_back("kernel: deterministic kind needs l and r");
      c.kernel.l = l.value_or(0.0);
      c.kernel.r = r.value_or(0.0);
    } else if (c.kernel.kind == "mixture") {
      if (!k.contains("atoms") || !k.at("atoms").is_array()) {
        errors.push_back("kernel: mixture kind needs an atoms list");
      } else {
        for (const auto& a : k.at("atoms")) {
          auto l = rd.get<double>(a, "l", "kernel.atoms.");
          auto r = rd.get<double>(a, "r", "kernel.atoms.");
          auto p = rd.get<double>(a, "p", "kernel.atoms.");
          if (!l || !r || !p) {
            errors.push_back("kernel: every atom needs l, r and p");
            break;
          }
          c.kernel.atoms.push_back({*l, *r, *p});
        }
      }
    } else if (c.kernel.kind != "kac") {
      errors.push_back("kernel: unknown kind '" + c.kernel.kind + "'");
    }
  }

  // initial law
  if (!doc.contains("initial") || !doc.at("initial").is_object()) {
    errors.push_back("initial: missing block");
  } else {
    const auto& i = doc.at("initial");
    c.initial.kind = rd.get<std::string>(i, "kind", "initial.").value_or("");
    if (c.initial.kind != "symmetric-pareto" && c.initial.kind != "asymmetric-pareto")
      errors.push_back("initial: unknown kind '" + c.initial.kind + "'");
    if (auto a = rd.get<double>(i, "alpha", "initial.")) c.initial.alpha = *a;
    else errors.push_back("initial: alpha missing");
    if (!(c.initial.alpha > 0.0 && c.initial.alpha < 2.0))
      errors.push_back("initial: alpha must lie in (0,2); alpha = 2 is not supported");
    c.initial.xmin = rd.get<double>(i, "xmin", "initial.");
    c.initial.gamma0 = rd.get<double>(i, "gamma0", "initial.").value_or(0.0);
    if (c.initial.kind == "asymmetric-pareto") {
      auto cp = rd.get<double>(i, "c_plus", "initial.");
      auto cm = rd.get<double>(i, "c_minus", "initial.");
      if (!cp || !cm) errors.push_back("initial: asymmetric-pareto needs c_plus and c_minus");
      c.initial.c_plus = cp.value_or(0.5);
      c.initial.c_minus = cm.value_or(0.5);
      if (c.initial.alpha == 1.0 && c.initial.c_plus != c.initial.c_minus)
        errors.push_back("initial: alpha = 1 requires c0+ = c0- (hypothesis of the alpha = 1 limit theorem)");
    }
  }

  c.t = rd.reals(doc, "t");
  c.xs = rd.reals(doc, "xs");
  c.xi = rd.reals(doc, "xi");
  c.n = rd.counts(doc, "n");
  c.b = rd.reals(doc, "b");
  if (auto v = rd.count(doc, "N")) c.N = *v;
  if (auto v = rd.count(doc, "pool_size")) c.pool_size = *v;
  if (doc.contains("iterations")) {
    auto v = rd.get<double>(doc, "iterations", "");
    if (!v || *v < 0 || *v != std::floor(*v)) errors.push_back("iterations: must be a non-negative integer");
    else c.iterations = static_cast<std::size_t>(*v);
  }
  if (doc.contains("burn_in")) {
    auto v = rd.get<double>(doc, "burn_in", "");
    if (!v || *v < 0 || *v != std::floor(*v)) errors.push_back("burn_in: must be a non-negative integer");
    else c.burn_in = static_cast<std::size_t>(*v);
  }
  if (auto v = rd.count(doc, "workers")) c.workers = *v;
  if (auto v = rd.count(doc, "chunk_size")) c.chunk_size = *v;
  c.epsilon = rd.get<double>(doc, "epsilon", "").value_or(c.epsilon);
  c.gamma = rd.get<double>(doc, "gamma", "").value_or(c.gamma);
  c.eta = rd.get<double>(doc, "eta", "").value_or(c.eta);
  c.tol = rd.get<double>(doc, "tol", "").value_or(c.tol);
  c.delta = rd.get<double>(doc, "delta", "").value_or(c.delta);
  if (!(c.eta > 0.0)) errors.push_back("eta: must be positive");
  if (!(c.tol > 0.0)) errors.push_back("tol: must be positive");

  if (doc.contains("schedule")) {
    const auto& s = doc.at("schedule");
    ScheduleSpec sp;
    sp.kind = rd.get<std::string>(s, "kind", "schedule.").value_or("");
    sp.rate = rd.get<double>(s, "rate", "schedule.").value_or(1.0);
    sp.horizon = rd.get<double>(s, "horizon", "schedule.").value_or(100.0);
    if (sp.kind != "exponential" && sp.kind != "power")
      errors.push_back("schedule: kind must be 'exponential' or 'power'");
    if (!(sp.rate > 0.0)) errors.push_back("schedule: rate must be positive");
    if (!(sp.horizon > 0.0)) errors.push_back("schedule: horizon must be positive");
    c.schedule = sp;
  }

  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    if (o.is_string()) {
      c.output_path = o.get<std::string>();
    } else if (o.is_object()) {
      c.output_path = rd.get<std::string>(o, "path", "output.").value_or("");
      c.output_format = rd.get<std::string>(o, "format", "output.").value_or("csv");
      c.pool_output = rd.get<std::string>(o, "pool", "output.").value_or("");
      if (c.output_format != "csv") errors.push_back("output: only the csv format is supported");
    } else {
      errors.push_back("output: expected a path or an object");
    }
  }

  // experiment-specific requirements
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) errors.push_back(c.experiment + ": " + what);
  };
  const auto& e = c.experiment;
  if (e == "tail") {
    need(!c.t.empty(), "needs t");
    need(!c.xs.empty(), "needs xs");
    need(c.N >= 10000, "needs N >= 10000");
  } else if (e == "cdf-H") {
    need(!c.t.empty(), "needs t");
    need(!c.xs.empty(), "needs xs");
  } else if (e == "cf-V") {
    need(!c.t.empty(), "needs t");
    need(!c.xi.empty(), "needs xi");
  } else if (e == "bounds") {
    need(!c.n.empty() || !c.b.empty(), "needs n or b");
    need(!c.xs.empty(), "needs xs");
    need(c.epsilon > 0.0 && c.epsilon < 1.0, "epsilon must lie in (0,1)");
    need(c.gamma > 0.0, "gamma must be positive");
  } else if (e == "baseline") {
    need(!c.n.empty(), "needs n");
    need(!c.xs.empty(), "needs xs");
  } else if (e == "ode-residual") {
    need(!c.t.empty(), "needs t");
    need(!c.xs.empty(), "needs xs");
    need(c.delta > 0.0 && c.delta <= 0.1, "delta must lie in (0, 0.1]");
    for (double x : c.xs) need(x != 0.0, "xs must be non-zero");
  } else if (e == "martingale") {
    need(!c.n.empty(), "needs n");
  }
  for (double t : c.t) if (!(t >= 0.0)) errors.push_back("t: must be non-negative");
  if (e != "ode-residual")
    for (double x : c.xs) if (!(x > 0.0)) errors.push_back("xs: must be positive");

  // object-level validation of kernel and law
  if (errors.empty()) {
    try {
      (void)make_kernel(c.kernel);
    } catch (const Error& ex) {
      errors.push_back(std::string("kernel: ") + ex.what());
    }
    try {
      (void)make_law(c.initial);
    } catch (const Error& ex) {
      errors.push_back(std::string("initial: ") + ex.what());
    }
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  json doc = json::parse(text, nullptr, false, /*ignore_comments=*/true);
  if (doc.is_discarded()) throw ConfigError({"document is not valid JSON"});
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Running

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  std::string experiment;
  Table table;
  std::vector<std::string> warnings;
  json regime;   ///< S(alpha), S(2 alpha), mu(alpha), case id
  json summary;  ///< experiment-level outputs (KS distances, ...)
  double wall_seconds = 0.0;
  std::vector<double> pool;  ///< exported Z pool (fixed-point experiment)

  int exit_code() const { return warnings.empty() ? kOk : kWarning; }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
    out += '\n';
  }
  return out;
}

namespace detail {

inline double as_real(std::size_t v) { return static_cast<double>(v); }

inline void run_tail(const ExperimentConfig& c, const CollisionKernel& kernel,
                     const InitialLaw& law, double mu, RunResult& out) {
  out.table.columns = {"t", "x", "N", "hits_V", "hits_H", "p_V", "se_V",
                       "p_H", "se_H", "ratio_paper", "ratio_max"};
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    auto rep = estimate_tail(kernel, law, c.t[k], c.xs, c.N, mu,
                             c.plan("t" + std::to_string(k)));
    for (auto& w : rep.warnings) out.warnings.push_back("t=" + format_number(c.t[k]) + " " + w);
    for (const auto& e : rep.rows)
      out.table.rows.push_back({e.t, e.x, as_real(e.N), as_real(e.hits_V), as_real(e.hits_H), e.p_V,
                                e.se_V, e.p_H, e.se_H, e.ratio_paper, e.ratio_max});
  }
}

inline ZPool fixed_point_pool(const ExperimentConfig& c, const CollisionKernel& kernel,
                              double S_alpha) {
  Stream rng = derive_stream(c.seed, c.experiment + "/pool", 0);
  return zpool_iterate(ZPool::ones(c.pool_size, c.initial.alpha, S_alpha), kernel, rng,
                       c.iterations);
}

template <typename PerPath>
std::vector<std::vector<double>> collect_paths(const ExperimentConfig& c,
                                               const CollisionKernel& kernel,
                                               const InitialLaw& law, double t,
                                               const std::string& tag, PerPath&& f) {
  return map_chunks(c.plan(tag), c.N, [&](const ChunkRange& r, Stream& rng) {
    std::vector<double> out;
    out.reserve(r.size());
    PathSampler sampler(kernel, law, law.alpha());
    for (std::size_t i = r.begin; i < r.end; ++i) out.push_back(f(sampler.sample(t, rng)));
    return out;
  });
}

inline void run_cdf_h(const ExperimentConfig& c, const CollisionKernel& kernel,
                      const InitialLaw& law, double S, double mu, RunResult& out) {
  const ZPool pool = fixed_point_pool(c, kernel, S);
  out.table.columns = {"t", "x", "N", "pool_size", "cdf_empirical", "se_empirical", "cdf_limit"};
  json ks = json::array();
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    const double t = c.t[k];
    const double scale = std::exp(-mu * t);
    auto parts = collect_paths(c, kernel, law, t, "t" + std::to_string(k),
                               [scale](const PathSample& p) { return scale * p.H; });
    std::vector<double> h;
    h.reserve(c.N);
    for (auto& p : parts) h.insert(h.end(), p.begin(), p.end());
    const EmpiricalCdf cdf(h);
    for (double x : c.xs) {
      const auto pr = proportion(static_cast<std::size_t>(std::llround(cdf(x) * static_cast<double>(c.N))), c.N);
      out.table.rows.push_back({t, x, as_real(c.N), as_real(c.pool_size), pr.p, pr.se,
                                cdf_H_infinity(x, pool, law.c0(), law.alpha())});
    }
    // KS distance against the mixture CDF, checked at 512 evenly spaced
    // order statistics; each evaluation of the limit CDF costs a pass over
    // the pool.
    const auto sorted = cdf.sorted();
    const std::size_t probes = std::min<std::size_t>(512, sorted.size());
    double d = 0.0;
    for (std::size_t q = 0; q < probes; ++q) {
      const std::size_t i = (q * (sorted.size() - 1)) / std::max<std::size_t>(1, probes - 1);
      const double f = cdf_H_infinity(sorted[i], pool, law.c0(), law.alpha());
      const double n = static_cast<double>(sorted.size());
      d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    ks.push_back({{"t", t}, {"ks_probe", d}});
  }
  out.summary["ks"] = ks;
}

inline void run_cf_v(const ExperimentConfig& c, const CollisionKernel& kernel,
                     const InitialLaw& law, double S, double mu, RunResult& out) {
  const ZPool pool = fixed_point_pool(c, kernel, S);
  const StableParams params = stable_params(law.c0_plus(), law.c0_minus(), law.alpha(), law.gamma0());
  out.table.columns = {"t", "xi", "N", "pool_size", "re_empirical", "im_empirical",
                       "re_limit", "im_limit", "abs_diff"};
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    const double t = c.t[k];
    const double scale = std::exp(-mu * t);
    auto parts = collect_paths(c, kernel, law, t, "t" + std::to_string(k),
                               [scale](const PathSample& p) { return scale * p.V; });
    for (double xi : c.xi) {
      double re = 0.0, im = 0.0;
      for (const auto& part : parts)
        for (double v : part) {
          re += std::cos(xi * v);
          im += std::sin(xi * v);
        }
      re /= static_cast<double>(c.N);
      im /= static_cast<double>(c.N);
      const auto lim = cf_V_infinity(xi, pool, params);
      out.table.rows.push_back({t, xi, as_real(c.N), as_real(c.pool_size), re, im, lim.real(),
                                lim.imag(), std::hypot(re - lim.real(), im - lim.imag())});
    }
  }
}

inline void run_fixed_point(const ExperimentConfig& c, const CollisionKernel& kernel, double S,
                            RunResult& out) {
  out.table.columns = {"iteration", "pool_size", "mean", "se_mean", "variance"};
  Stream rng = derive_stream(c.seed, c.experiment + "/pool", 0);
  ZPool pool = ZPool::ones(c.pool_size, c.initial.alpha, S);
  auto record = [&](const ZPool& p) {
    const auto m = p.moments();
    out.table.rows.push_back({as_real(p.iterations), as_real(p.samples.size()), m.mean,
                              m.std_error(), m.variance()});
  };
  record(pool);
  for (std::size_t it = 0; it < c.iterations; ++it) {
    pool = zpool_iterate(std::move(pool), kernel, rng, 1);
    if (pool.iterations >= c.burn_in || it + 1 == c.iterations) record(pool);
  }
  if (!c.t.empty()) {
    const double t = c.t.front();
    const ZPool tree = zpool_from_trees(kernel, c.initial.alpha, S, t, c.pool_size, c.plan("tree"));
    out.summary["tree_time"] = t;
    out.summary["tree_mean"] = tree.moments().mean;
    out.summary["ks_tree_vs_fixed_point"] = ks_two_sample(tree.samples, pool.samples);
  }
  out.pool = pool.samples;
}

inline void run_bounds(const ExperimentConfig& c, const InitialLaw& law, RunResult& out) {
  out.table.columns = {"n", "x", "epsilon", "gamma", "lower", "upper", "max_lower", "max_upper",
                       "mc", "mc_se", "mc_max", "mc_max_se", "delta"};
  std::vector<std::vector<double>> weight_sets;
  if (!c.b.empty()) {
    weight_sets.push_back(c.b);
  } else {
    for (std::size_t n : c.n)
      weight_sets.emplace_back(n, std::pow(static_cast<double>(n), -1.0 / law.alpha()));
  }
  std::size_t k = 0;
  for (const auto& b : weight_sets)
    for (double x : c.xs) {
      const auto r = lemma_bounds(b, law, x, c.epsilon, c.gamma, c.N, c.plan("case" + std::to_string(k++)));
      out.table.rows.push_back({as_real(r.n), r.x, r.epsilon, r.gamma, r.lower, r.upper, r.max_lower,
                                r.max_upper, r.mc, r.mc_se, r.mc_max, r.mc_max_se, r.delta});
    }
}

inline void run_baseline(const ExperimentConfig& c, const InitialLaw& law, RunResult& out) {
  out.table.columns = {"n", "x", "N", "p_sum", "se_sum", "p_max", "se_max",
                       "ratio_sum_max", "ratio_paper", "single_jump"};
  std::size_t k = 0;
  for (std::size_t n : c.n)
    for (double x : c.xs) {
      const auto r = iid_baseline(law, n, x, c.N, c.plan("case" + std::to_string(k++)));
      out.table.rows.push_back({as_real(r.n), r.x, as_real(r.N), r.p_sum, r.se_sum, r.p_max,
                                r.se_max, r.ratio_sum_max, r.ratio_paper, r.single_jump});
    }
}

inline void run_ode(const ExperimentConfig& c, const CollisionKernel& kernel, const InitialLaw& law,
                    RunResult& out) {
  out.table.columns = {"t", "x", "delta", "N", "residual", "se"};
  std::size_t k = 0;
  for (double t : c.t)
    for (double x : c.xs) {
      const auto r = max_ode_residual(kernel, law, t, x, c.delta, c.N, c.plan("case" + std::to_string(k++)));
      out.table.rows.push_back({t, x, c.delta, as_real(c.N), r.residual, r.se});
    }
}

inline void run_martingale(const ExperimentConfig& c, const CollisionKernel& kernel, double S,
                           RunResult& out) {
  out.table.columns = {"n", "replications", "mean", "se"};
  const double alpha = c.initial.alpha;
  for (std::size_t n : c.n) {
    const double m = mean_weight_norm(S, n).m;
    const MeanAccumulator acc = reduce_chunks(
        c.plan("n" + std::to_string(n)), c.N,
        [&](const ChunkRange& r, Stream& rng) {
          MeanAccumulator a;
          WeightArray w;
          const double alphas[1] = {alpha};
          for (std::size_t i = r.begin; i < r.end; ++i) {
            grow_weights_into(w, kernel, n, alphas, rng);
            a.add(w.M_at(0) / m);
          }
          return a;
        },
        [](MeanAccumulator& a, const MeanAccumulator& p) { a.merge(p); });
    out.table.rows.push_back({as_real(n), as_real(c.N), acc.mean, acc.std_error()});
  }
}

}  // namespace detail

inline RunResult run(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  out.experiment = c.experiment;
  const CollisionKernel kernel = make_kernel(c.kernel);
  const InitialLaw law = make_law(c.initial);
  const double alpha = law.alpha();

  const auto sa = spectral(kernel, alpha);
  const auto s2a = spectral(kernel, 2.0 * alpha);
  out.regime = {{"alpha", alpha}, {"S_alpha", sa.Q}, {"S_2alpha", s2a.Q}, {"mu_alpha", sa.mu}};
  std::optional<Regime> regime;
  try {
    regime = classify_regime(sa, s2a, alpha, c.eta, c.tol);
    out.regime["case"] = std::string(to_string(regime->case_id));
  } catch (const RegimeUnavailable& ex) {
    out.regime["case"] = "unavailable";
    if (c.experiment == "tail") out.warnings.push_back(std::string("regime unavailable: ") + ex.what());
  }

  if (c.experiment == "tail" && regime && regime->case_id != RegimeCase::unrestricted) {
    if (!c.schedule) {
      out.warnings.push_back("regime '" + std::string(to_string(regime->case_id)) +
                             "' restricts thresholds; no schedule supplied to check admissibility");
    } else {
      const auto& s = *c.schedule;
      auto x_of_t = [s](double t) {
        return s.kind == "exponential" ? std::exp(s.rate * t) : std::pow(t, s.rate);
      };
      const double eps = std::min(c.epsilon, 0.5 * alpha);
      const auto verdict = admissible_schedule(*regime, eps, s.horizon, x_of_t);
      out.regime["schedule"] = std::string(to_string(verdict));
      if (verdict == Admissibility::inadmissible)
        out.warnings.push_back("threshold schedule is not admissible for this regime");
    }
  }

  const auto& e = c.experiment;
  if (e == "tail") detail::run_tail(c, kernel, law, sa.mu, out);
  else if (e == "cdf-H") detail::run_cdf_h(c, kernel, law, sa.Q, sa.mu, out);
  else if (e == "cf-V") detail::run_cf_v(c, kernel, law, sa.Q, sa.mu, out);
  else if (e == "fixed-point") detail::run_fixed_point(c, kernel, sa.Q, out);
  else if (e == "bounds") detail::run_bounds(c, law, out);
  else if (e == "baseline") detail::run_baseline(c, law, out);
  else if (e == "ode-residual") detail::run_ode(c, kernel, law, out);
  else if (e == "martingale") detail::run_martingale(c, kernel, sa.Q, out);

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Writes the CSV to `csv_path`, a metadata sidecar `<csv_path>.meta.json`
/// (config echo, regime, warnings, summary, wall time) and, if requested,
/// the exported pool. Returns kIoError on any failure.
inline int write_outputs(const ExperimentConfig& c, const RunResult& r, const std::string& csv_path) {
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) return kIoError;
    f << to_csv(r.table);
    if (!f) return kIoError;
  }
  {
    json meta = {{"experiment", r.experiment}, {"config", c.source},    {"regime", r.regime},
                 {"warnings", r.warnings},     {"summary", r.summary},  {"wall_seconds", r.wall_seconds}};
    std::ofstream f(csv_path + ".meta.json", std::ios::binary);
    if (!f) return kIoError;
    f << meta.dump(2) << '\n';
    if (!f) return kIoError;
  }
  if (!c.pool_output.empty() && !r.pool.empty()) {
    const bool binary = c.pool_output.size() > 4 &&
                        c.pool_output.compare(c.pool_output.size() - 4, 4, ".bin") == 0;
    std::ofstream f(c.pool_output, std::ios::binary);
    if (!f) return kIoError;
    if (binary) {
      f.write(reinterpret_cast<const char*>(r.pool.data()),
              static_cast<std::streamsize>(r.pool.size() * sizeof(double)));
    } else {
      f << "z\n";
      for (double z : r.pool) f << format_number(z) << '\n';
    }
    if (!f) return kIoError;
  }
  return kOk;
}

}  // namespace kacld::cli

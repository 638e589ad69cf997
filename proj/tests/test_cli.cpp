#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kacld/cli.hpp"

using namespace kacld::cli;

namespace {

json tail_doc() {
  return json::parse(R"({
    "experiment": "tail",
    "kernel": {"kind": "kac"},
    "initial": {"kind": "symmetric-pareto", "alpha": 1.5},
    "t": [0.5, 1.0],
    "xs": [2.0, 5.0],
    "N": 20000,
    "chunk_size": 3000,
    "seed": 7
  })");
}

std::vector<std::string> errors_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, ValidDocumentParses) {
  const auto c = parse_config(tail_doc());
  EXPECT_EQ(c.experiment, "tail");
  EXPECT_EQ(c.t.size(), 2u);
  EXPECT_EQ(c.N, 20000u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_EQ(c.eta, 0.1);
}

TEST(Config, AllErrorsAreCollected) {
  auto doc = tail_doc();
  doc.erase("seed");
  doc["kernel"]["kind"] = "maxwell";
  doc["initial"]["alpha"] = 2.0;
  doc["bogus"] = 1;
  const auto errors = errors_of(doc);
  EXPECT_GE(errors.size(), 4u);
  EXPECT_TRUE(mentions(errors, "seed"));
  EXPECT_TRUE(mentions(errors, "maxwell"));
  EXPECT_TRUE(mentions(errors, "alpha = 2"));
  EXPECT_TRUE(mentions(errors, "bogus"));
}

TEST(Config, AlphaOneRequiresBalancedTails) {
  auto doc = tail_doc();
  doc["initial"] = {{"kind", "asymmetric-pareto"}, {"alpha", 1.0}, {"c_plus", 0.7}, {"c_minus", 0.3}};
  EXPECT_TRUE(mentions(errors_of(doc), "c0+ = c0-"));
  doc["initial"]["c_minus"] = 0.7;
  EXPECT_TRUE(errors_of(doc).empty());
}

TEST(Config, ExperimentSpecificFields) {
  auto doc = tail_doc();
  doc.erase("xs");
  doc["N"] = 5000;
  const auto errors = errors_of(doc);
  EXPECT_TRUE(mentions(errors, "needs xs"));
  EXPECT_TRUE(mentions(errors, "N >= 10000"));

  auto bounds = tail_doc();
  bounds["experiment"] = "bounds";
  bounds["epsilon"] = 1.5;
  EXPECT_TRUE(mentions(errors_of(bounds), "needs n or b"));
  EXPECT_TRUE(mentions(errors_of(bounds), "epsilon"));

  auto unknown = tail_doc();
  unknown["experiment"] = "plot";
  EXPECT_TRUE(mentions(errors_of(unknown), "unknown kind 'plot'"));
}

TEST(Config, InvalidKernelParametersSurface) {
  auto doc = tail_doc();
  doc["kernel"] = {{"kind", "deterministic"}, {"l", 0.0}, {"r", 0.5}};
  EXPECT_TRUE(mentions(errors_of(doc), "kernel"));
  doc["kernel"] = {{"kind", "mixture"}, {"atoms", {{{"l", 1.0}, {"r", 0.5}, {"p", 0.4}}}}};
  EXPECT_TRUE(mentions(errors_of(doc), "sum to 1"));
}

TEST(Config, TextParsingAndInvalidJson) {
  EXPECT_THROW(parse_config(std::string("{not json")), ConfigError);
  EXPECT_NO_THROW(parse_config(tail_doc().dump()));
}

TEST(Overrides, DottedKeysAndJsonValues) {
  auto doc = tail_doc();
  apply_override(doc, "N=50000");
  apply_override(doc, "initial.alpha=0.5");
  apply_override(doc, "xs=[3,4,5]");
  apply_override(doc, "kernel.kind=kac");
  apply_override(doc, "schedule.kind=power");
  const auto c = parse_config(doc);
  EXPECT_EQ(c.N, 50000u);
  EXPECT_EQ(c.initial.alpha, 0.5);
  EXPECT_EQ(c.xs.size(), 3u);
  ASSERT_TRUE(c.schedule.has_value());
  EXPECT_EQ(c.schedule->kind, "power");
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(doc, "a..b=1"), ConfigError);
}

TEST(Run, TailTableSchemaAndDeterminism) {
  auto doc = tail_doc();
  const auto one = run(parse_config(doc));
  doc["workers"] = 3;
  const auto three = run(parse_config(doc));
  const std::vector<std::string> schema{"t", "x", "N", "hits_V", "hits_H", "p_V", "se_V",
                                        "p_H", "se_H", "ratio_paper", "ratio_max"};
  EXPECT_EQ(one.table.columns, schema);
  EXPECT_EQ(one.table.rows.size(), 4u);
  EXPECT_EQ(to_csv(one.table), to_csv(three.table));
  EXPECT_EQ(one.exit_code(), kOk);
  EXPECT_EQ(one.regime["case"], "unrestricted");
}

TEST(Run, DifferentSeedsDiffer) {
  auto doc = tail_doc();
  const auto a = run(parse_config(doc));
  doc["seed"] = 8;
  EXPECT_NE(to_csv(a.table), to_csv(run(parse_config(doc)).table));
}

TEST(Run, LowPrecisionIsAWarning) {
  auto doc = tail_doc();
  doc["N"] = 10000;
  doc["xs"] = {100.0};
  const auto r = run(parse_config(doc));
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.exit_code(), kWarning);
}

TEST(Run, RestrictedRegimeWithoutScheduleWarns) {
  auto doc = tail_doc();
  const double l = std::pow(0.25, 1.0 / 1.5);
  doc["kernel"] = {{"kind", "deterministic"}, {"l", l}, {"r", l}};
  auto r = run(parse_config(doc));
  EXPECT_EQ(r.exit_code(), kWarning);
  doc["schedule"] = {{"kind", "exponential"}, {"rate", 0.5}};
  r = run(parse_config(doc));
  EXPECT_EQ(r.regime["schedule"], "admissible");
  EXPECT_EQ(r.exit_code(), kOk);
  doc["schedule"] = {{"kind", "power"}, {"rate", 2.0}};
  r = run(parse_config(doc));
  EXPECT_EQ(r.regime["schedule"], "inadmissible");
  EXPECT_EQ(r.exit_code(), kWarning);
}

TEST(Run, BoundsSchemaStartsWithRequiredColumns) {
  auto doc = tail_doc();
  doc["experiment"] = "bounds";
  doc["n"] = {4};
  doc["xs"] = {10.0};
  const auto r = run(parse_config(doc));
  const std::vector<std::string> head{"n", "x", "epsilon", "gamma", "lower", "upper",
                                      "max_lower", "max_upper", "mc", "mc_se"};
  ASSERT_GE(r.table.columns.size(), head.size());
  EXPECT_TRUE(std::equal(head.begin(), head.end(), r.table.columns.begin()));
  ASSERT_EQ(r.table.rows.size(), 1u);
  EXPECT_EQ(r.table.rows[0][0], 4.0);
}

TEST(Run, OtherExperimentsProduceTables) {
  auto base = tail_doc();
  base["N"] = 10000;
  base["pool_size"] = 5000;
  base["iterations"] = 5;
  base["burn_in"] = 0;

  auto cdf = base;
  cdf["experiment"] = "cdf-H";
  EXPECT_EQ(run(parse_config(cdf)).table.rows.size(), 4u);

  auto cf = base;
  cf["experiment"] = "cf-V";
  cf["xi"] = {-1.0, 1.0};
  const auto cfr = run(parse_config(cf));
  EXPECT_EQ(cfr.table.rows.size(), 4u);

  auto fp = base;
  fp["experiment"] = "fixed-point";
  fp["t"] = {3.0};
  const auto fpr = run(parse_config(fp));
  EXPECT_EQ(fpr.table.rows.size(), 6u);
  EXPECT_TRUE(fpr.summary.contains("ks_tree_vs_fixed_point"));
  EXPECT_EQ(fpr.pool.size(), 5000u);

  auto iid = base;
  iid["experiment"] = "baseline";
  iid["n"] = {10};
  EXPECT_EQ(run(parse_config(iid)).table.rows.size(), 2u);

  auto ode = base;
  ode["experiment"] = "ode-residual";
  ode["t"] = {0.5};
  ode["xs"] = {-1.0, 2.0};
  EXPECT_EQ(run(parse_config(ode)).table.rows.size(), 2u);

  auto mart = base;
  mart["experiment"] = "martingale";
  mart["n"] = {8, 16};
  const auto mr = run(parse_config(mart));
  ASSERT_EQ(mr.table.rows.size(), 2u);
  EXPECT_NEAR(mr.table.rows[0][2], 1.0, 4.0 * mr.table.rows[0][3]);
}

TEST(Output, CsvFormattingIsLocaleFree) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  Table t{{"a", "b"}, {{1.0, 2.5}}};
  EXPECT_EQ(to_csv(t), "a,b\n1,2.5\n");
}

TEST(Output, FilesAndIoFailure) {
  const auto dir = std::filesystem::temp_directory_path() / "kacld_cli_test";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "tail.csv").string();
  auto c = parse_config(tail_doc());
  const auto r = run(c);
  ASSERT_EQ(write_outputs(c, r, csv), kOk);
  EXPECT_EQ(slurp(csv), to_csv(r.table));
  const auto meta = json::parse(slurp(csv + ".meta.json"));
  EXPECT_EQ(meta["config"]["seed"], 7);
  EXPECT_TRUE(meta.contains("wall_seconds"));
  EXPECT_EQ(meta["regime"]["case"], "unrestricted");
  EXPECT_EQ(write_outputs(c, r, (dir / "missing" / "x.csv").string()), kIoError);
  std::filesystem::remove_all(dir);
}

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kacld/processes.hpp"
#include "kacld/stats.hpp"

using namespace kacld;

TEST(Yule, PmfAtLogTwo) {
  Stream rng(31);
  const int N = 100000;
  std::vector<int> counts(14, 0);
  for (int i = 0; i < N; ++i) {
    const auto n = sample_yule(std::log(2.0), rng);
    if (n < counts.size()) ++counts[n];
  }
  for (int k = 1; k <= 12; ++k) {
    const double p = std::pow(2.0, -k);
    EXPECT_NEAR(counts[k] / double(N), p, 5.0 * std::sqrt(p * (1 - p) / N)) << "k=" << k;
  }
}

TEST(Yule, MeanGrowsLikeExponential) {
  Stream rng(32);
  MeanAccumulator acc;
  for (int i = 0; i < 200000; ++i) acc.add(static_cast<double>(sample_yule(2.0, rng)));
  EXPECT_NEAR(acc.mean, std::exp(2.0), 4.0 * acc.std_error());
  EXPECT_EQ(sample_yule(0.0, rng), 1u);
  EXPECT_THROW(sample_yule(-1.0, rng), DomainError);
}

TEST(Paths, SingleLeafIsTheInitialDatum) {
  const auto kernel = CollisionKernel::kac();
  const auto law = InitialLaw::symmetric_pareto(1.5);
  Stream a(3), b(3);
  PathSampler sampler(kernel, law, 1.5);
  const auto p = sampler.sample_given_n(0.0, 1, a);
  EXPECT_EQ(p.n, 1u);
  EXPECT_EQ(p.V, law.sample(b));
  EXPECT_EQ(p.H, std::abs(p.V));
  EXPECT_EQ(p.M_alpha, 1.0);
}

TEST(Paths, VAndHShareLeaves) {
  const auto kernel = CollisionKernel::kac();
  const auto law = InitialLaw::symmetric_pareto(1.0);
  Stream rng(4);
  PathSampler sampler(kernel, law, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto p = sampler.sample(1.5, rng);
    double v = 0.0, h = 0.0;
    const auto betas = sampler.weights().betas();
    const auto leaves = sampler.leaves();
    for (std::size_t j = 0; j < betas.size(); ++j) {
      v += betas[j] * leaves[j];
      h = std::max(h, std::abs(betas[j] * leaves[j]));
    }
    EXPECT_EQ(p.V, v);
    EXPECT_EQ(p.H, h);
  }
}

TEST(Paths, ExtensionHasTheLaterMarginal) {
  const auto kernel = CollisionKernel::kac();
  const auto law = InitialLaw::symmetric_pareto(1.5);
  Stream rng(5);
  PathSampler sampler(kernel, law, 1.5);
  MeanAccumulator n_later;
  std::size_t grew = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    const auto now = sampler.sample(1.0, rng);
    const auto later = sampler.extend(1.5, 0.5, rng);
    ASSERT_GE(later.n, now.n);
    grew += later.n > now.n;
    n_later.add(static_cast<double>(later.n));
  }
  EXPECT_NEAR(n_later.mean, std::exp(1.5), 4.0 * n_later.std_error());
  EXPECT_GT(grew, 0u);
}

TEST(Paths, RescalingUsesSpectralRate) {
  PathSample p;
  p.t = 2.0;
  p.V = -3.0;
  p.H = 4.0;
  const auto r = rescaled(p, 0.25);
  EXPECT_DOUBLE_EQ(r.v, -3.0 * std::exp(-0.5));
  EXPECT_DOUBLE_EQ(r.h, 4.0 * std::exp(-0.5));
}

TEST(WildOracle, MatchesTreeConditionedMax) {
  const auto kernel = CollisionKernel::kac();
  const auto law = InitialLaw::symmetric_pareto(1.5);
  Stream a(41), b(42);
  PathSampler sampler(kernel, law, 1.5);
  const int N = 40000;
  std::vector<double> wild, tree;
  for (int i = 0; i < N; ++i) {
    wild.push_back(wild_oracle_max(kernel, law, 5, a));
    tree.push_back(sampler.sample_given_n(0.0, 5, b).H);
  }
  // two-sample KS critical value at level 0.001 is 1.95 sqrt(2 / N)
  EXPECT_LT(ks_two_sample(wild, tree), 1.95 * std::sqrt(2.0 / N));
}

TEST(WildOracle, OrderOneAndRange) {
  const auto kernel = CollisionKernel::kac();
  const auto law = InitialLaw::symmetric_pareto(1.5);
  Stream a(1), b(1);
  EXPECT_EQ(wild_oracle_max(kernel, law, 1, a), std::abs(law.sample(b)));
  EXPECT_THROW(wild_oracle_max(kernel, law, 0, a), DomainError);
  EXPECT_THROW(wild_oracle_max(kernel, law, kWildOracleMaxN + 1, a), DomainError);
  EXPECT_NO_THROW(wild_oracle_max(kernel, law, kWildOracleMaxN, a));
}

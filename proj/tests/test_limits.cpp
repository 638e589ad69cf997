#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kacld/limits.hpp"

using namespace kacld;

namespace {

std::complex<double> empirical_cf(const std::vector<double>& xs, double xi) {
  double re = 0.0, im = 0.0;
  for (double x : xs) {
    re += std::cos(xi * x);
    im += std::sin(xi * x);
  }
  return {re / xs.size(), im / xs.size()};
}

}  // namespace

TEST(Stable, ParametersOfSymmetricParetoLimit) {
  const auto p = stable_params(0.5, 0.5, 1.5);
  // pi / (2 Gamma(3/2) sin(3 pi / 4)) = sqrt(2 pi)
  EXPECT_NEAR(p.lambda, std::sqrt(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(p.lambda, 2.5066, 1e-4);
  EXPECT_DOUBLE_EQ(p.eta_skew, 0.0);
  const auto cf = cf_V_infinity(1.0, std::vector<double>(10, 1.0), p);
  EXPECT_NEAR(cf.real(), std::exp(-p.lambda), 1e-14);
  EXPECT_NEAR(cf.real(), 0.0816, 1e-4);
  EXPECT_NEAR(cf.imag(), 0.0, 1e-15);
}

TEST(Stable, LambdaFormulaIndependentCheck) {
  // Gamma(1 - a) cos(pi a / 2) equals pi / (2 Gamma(a) sin(pi a / 2)) for a != 1
  for (double a : {0.3, 0.5, 0.8, 1.2, 1.7}) {
    const double other = std::abs(boost::math::tgamma(1.0 - a) * std::cos(std::numbers::pi * a / 2.0));
    EXPECT_NEAR(stable_params(0.4, 0.6, a).lambda, other, 1e-10 * other) << "a=" << a;
  }
}

TEST(Stable, SamplerMatchesCharacteristicFunction) {
  for (double a : {0.5, 1.5})
    for (double cm : {0.5, 0.1}) {
      const auto p = stable_params(1.0 - cm, cm, a);
      Stream rng(7);
      std::vector<double> xs(200000);
      for (auto& x : xs) x = sample_stable(p, rng);
      for (double xi : {-1.0, -0.3, 0.3, 1.0}) {
        const auto target = cf_V_infinity(xi, std::vector<double>{1.0}, p);
        EXPECT_LT(std::abs(empirical_cf(xs, xi) - target), 0.01) << "a=" << a << " xi=" << xi;
      }
    }
}

TEST(Stable, CauchyCaseAtAlphaOne) {
  const auto p = stable_params(0.5, 0.5, 1.0, 0.3);
  EXPECT_NEAR(p.cauchy_scale, 0.5 * std::numbers::pi, 1e-15);
  Stream rng(8);
  std::vector<double> xs(200000);
  for (auto& x : xs) x = sample_stable(p, rng);
  for (double xi : {-1.0, 0.5, 2.0}) {
    const std::complex<double> target = std::exp(std::complex<double>(-p.cauchy_scale * std::abs(xi), 0.3 * xi));
    EXPECT_LT(std::abs(empirical_cf(xs, xi) - target), 0.01);
    EXPECT_LT(std::abs(cf_V_infinity(xi, std::vector<double>{1.0}, p) - target), 1e-14);
  }
  EXPECT_THROW(stable_params(0.7, 0.3, 1.0), DomainError);
}

TEST(Mixture, CharacteristicFunctionIsHermitian) {
  const auto p = stable_params(0.7, 0.3, 1.3);
  const std::vector<double> pool{0.2, 1.0, 1.8, 0.5};
  for (double xi : {0.1, 0.7, 3.0}) {
    const auto a = cf_V_infinity(xi, pool, p), b = cf_V_infinity(-xi, pool, p);
    EXPECT_NEAR(a.real(), b.real(), 1e-15);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-15);
    EXPECT_LE(std::abs(a), 1.0);
  }
  EXPECT_EQ(cf_V_infinity(0.0, pool, p), std::complex<double>(1.0, 0.0));
}

TEST(Mixture, MaxCdfShape) {
  const std::vector<double> pool{0.0, 0.5, 1.0, 2.5};
  EXPECT_EQ(cdf_H_infinity(-1.0, pool, 1.0, 1.5), 0.0);
  EXPECT_EQ(cdf_H_infinity(0.0, pool, 1.0, 1.5), 0.25);
  double prev = 0.25;
  for (double x = 0.01; x < 1e4; x *= 1.3) {
    const double f = cdf_H_infinity(x, pool, 1.0, 1.5);
    EXPECT_GE(f, prev);
    prev = f;
  }
  // far tail: 1 - F(x) ~ c0 x^{-alpha} E[Z]
  const std::vector<double> ones(4, 1.0);
  const double x = 30.0;
  EXPECT_NEAR((1.0 - cdf_H_infinity(x, ones, 1.0, 1.5)) / std::pow(x, -1.5), 1.0, 0.01);
  EXPECT_NEAR(cdf_H_infinity(2.0, ones, 1.0, 1.5), std::exp(-std::pow(2.0, -1.5)), 1e-15);
}

TEST(FixedPoint, ConservativeKernelKeepsMeanOne) {
  const auto kac = CollisionKernel::kac();
  const double S = spectral(kac, 1.0).Q;
  Stream rng(10);
  const auto pool = zpool_iterate(ZPool::ones(50000, 1.0, S), kac, rng, 30);
  EXPECT_EQ(pool.iterations, 30u);
  const auto m = pool.moments();
  EXPECT_NEAR(m.mean, 1.0, 0.01);
  for (double z : pool.samples) ASSERT_GE(z, 0.0);
}

TEST(FixedPoint, DegenerateAtOneForSteadyStateKernel) {
  const double a = 1.5;
  const double l = std::pow(0.5, 1.0 / a);
  Stream rng(11);
  const auto pool = zpool_iterate(ZPool::ones(1000, a, 0.0), CollisionKernel::deterministic(l, l), rng, 5);
  for (double z : pool.samples) EXPECT_NEAR(z, 1.0, 1e-14);
}

TEST(FixedPoint, TreePoolHasUnitMean) {
  const auto kac = CollisionKernel::kac();
  const auto pool = zpool_from_trees(kac, 1.0, 4.0, 40000, ChunkPlan{3, "tree", 5000, 2});
  EXPECT_EQ(pool.provenance, PoolProvenance::tree);
  const auto m = pool.moments();
  EXPECT_NEAR(m.mean, 1.0, 4.0 * m.std_error());
}

TEST(Mixture, VInfinitySamplesMatchMixedCf) {
  const auto kac = CollisionKernel::kac();
  Stream rng(12);
  const auto pool = zpool_iterate(ZPool::ones(20000, 1.5, spectral(kac, 1.5).Q), kac, rng, 20);
  const auto p = stable_params(0.5, 0.5, 1.5);
  std::vector<double> xs(200000);
  for (auto& x : xs) x = sample_V_infinity(pool, p, rng);
  for (double xi : {0.25, 1.0})
    EXPECT_LT(std::abs(empirical_cf(xs, xi) - cf_V_infinity(xi, pool, p)), 0.01);
}

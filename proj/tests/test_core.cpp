#include "gencert/core.hpp"
#include "gencert/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace gencert;

TEST(LogSumExp, MatchesNaiveSumOnModerateValues) {
  Vector x(4);
  x << 0.1, -2.0, 3.5, 1.25;
  double naive = 0;
  for (Index i = 0; i < x.size(); ++i) naive += std::exp(x(i));
  EXPECT_NEAR(log_sum_exp(x), std::log(naive), 1e-14);
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  Vector x(2);
  x << 1000.0, 1000.0;
  EXPECT_NEAR(log_sum_exp(x), 1000.0 + std::log(2.0), 1e-12);
  x << -1000.0, -1000.0;
  EXPECT_NEAR(log_sum_exp(x), -1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExp, NegativeInfinityEntriesAreIgnored) {
  const double ninf = -std::numeric_limits<double>::infinity();
  Vector x(3);
  x << ninf, 0.0, ninf;
  EXPECT_DOUBLE_EQ(log_sum_exp(x), 0.0);
  x << ninf, ninf, ninf;
  EXPECT_EQ(log_sum_exp(x), ninf);
  EXPECT_EQ(log_sum_exp(Vector(0)), ninf);
}

TEST(LogSumExp, WeightedFormSkipsZeroWeights) {
  Vector x(3), w(3);
  x << 1.0, 50.0, -1.0;
  w << 2.0, 0.0, 0.5;
  EXPECT_NEAR(weighted_log_sum_exp(x, w), std::log(2 * std::exp(1.0) + 0.5 * std::exp(-1.0)), 1e-14);
}

TEST(LogSumExp, AccumulatorAgreesWithBatch) {
  RandomStream rng(4);
  Vector x(500);
  LogSumExpAccumulator<> acc;
  for (Index i = 0; i < x.size(); ++i) {
    x(i) = 40 * rng.normal();
    acc.add(x(i));
  }
  EXPECT_NEAR(acc.value(), log_sum_exp(x), 1e-12);
}

TEST(RequireDelta, OpenIntervalOnly) {
  EXPECT_NO_THROW(require_delta(0.5));
  EXPECT_THROW(require_delta(0.0), ContractError);
  EXPECT_THROW(require_delta(1.0), ContractError);
  EXPECT_THROW(require_delta(std::nan("")), ContractError);
}

TEST(RandomStream, SameSeedAndStreamAreReproducible) {
  RandomStream a(123, 7), b(123, 7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, DistinctStreamsAndSplitsDiffer) {
  RandomStream a(123, 7), b(123, 8);
  EXPECT_NE(a.next_u64(), b.next_u64());
  RandomStream base(9, 1);
  RandomStream s1 = base.split(1), s2 = base.split(2);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
  // Splitting does not consume the parent.
  RandomStream c(9, 1), d(9, 1);
  (void)c.split(5);
  EXPECT_EQ(c.next_u64(), d.next_u64());
}

TEST(RandomStream, PhiloxKnownAnswer) {
  // Random123 known-answer vector for philox4x32-10 with zero counter and key.
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(RandomStream, UniformAndNormalMoments) {
  RandomStream rng(2024);
  const int N = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / N, 0.5, 4 * std::sqrt(1.0 / 12 / N));
  EXPECT_NEAR(sn / N, 0.0, 4 / std::sqrt(double(N)));
  EXPECT_NEAR(sn2 / N, 1.0, 4 * std::sqrt(2.0 / N));
}

#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <sstream>

#include "smfb/lattice_engine.hpp"
#include "smfb/ls_oracle.hpp"
#include "smfb/signal_model.hpp"

using namespace smfb;

namespace {

std::vector<double> randn(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

std::span<const double> block(const std::vector<double>& v, std::size_t m, std::size_t k) {
  return std::span<const double>(v).subspan(m * k, m);
}

bool close(double a, double b, double rel = 1e-8, double abs = 1e-10) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs);
}

// Growing-memory LS residual of band i at the newest block end, with
// optional exponential weighting applied by scaling the columns.
double oracle_residual(const std::vector<double>& z, const std::vector<double>& d, std::size_t m,
                       std::size_t p, std::size_t t, std::size_t i, double lambda = 1.0) {
  auto zm = build_data_matrix<double>(z, p, t, m);
  auto dr = desired_row<double>(d, zm, i);
  const auto cols = zm.rows.cols();
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double s = std::pow(lambda, 0.5 * static_cast<double>(cols - 1 - c));
    zm.rows.col(c) *= s;
    dr(c) *= s;
  }
  return project_residual(dr, zm, {1e-18});
}

}  // namespace

TEST(EngineConfigCheck, RejectsInvalidValues) {
  EXPECT_THROW((LatticeEngine<double>({2, 3})), ConfigError);
  EXPECT_THROW((LatticeEngine<double>({0, 2})), ConfigError);
  EXPECT_THROW((LatticeEngine<double>({1, 0})), ConfigError);
  EXPECT_THROW((LatticeEngine<double>({1, 1, 1e-12, 0.0})), ConfigError);
  EXPECT_THROW((LatticeEngine<double>({1, 1, 1e-12, 1.5})), ConfigError);
  EXPECT_THROW((LatticeEngine<double>({1, 1, -1.0})), ConfigError);
  EXPECT_NO_THROW((LatticeEngine<double>({2, 4, 0.0})));
}

TEST(EngineInit, LikelihoodsStartAtOne) {
  LatticeEngine<double> eng({3, 6});
  for (std::size_t i = 0; i < 3; ++i)
    for (double g : eng.phase(i).gamma) EXPECT_EQ(g, 1.0);
}

TEST(EngineInit, UninitializedEngineRefusesToStep) {
  LatticeEngine<double> eng;
  const std::vector<double> b{0.0};
  EXPECT_THROW(eng.step(b, b), Error);
}

TEST(EngineStep, ZeroInputKeepsEverythingZero) {
  LatticeEngine<double> eng({2, 4});
  const std::vector<double> zero(2, 0.0);
  for (int k = 0; k < 10; ++k) {
    const auto& e = eng.step(zero, zero);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t p = 0; p <= 4; ++p) EXPECT_EQ(e(i, p), 0.0);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& s = eng.phase(i);
    for (std::size_t p = 0; p < 4; ++p) {
      EXPECT_EQ(s.delta[p], 0.0);
      EXPECT_EQ(s.r_alpha[p], 0.0);
      EXPECT_EQ(s.r_beta[p], 0.0);
      EXPECT_EQ(eng.ladder_correlation(i, p), 0.0);
    }
  }
}

TEST(EngineStep, RejectsWrongBlockLength) {
  LatticeEngine<double> eng({2, 2});
  const std::vector<double> three(3, 1.0), two(2, 1.0);
  EXPECT_THROW(eng.step(three, two), DimensionError);
  EXPECT_THROW(eng.step(two, three), DimensionError);
}

TEST(EngineStep, ScalarCaseIsForwardPrediction) {
  // d = x, z = x delayed by one: e^p is the order-p forward prediction error.
  std::mt19937_64 rng(21);
  const auto x = randn(rng, 30);
  std::vector<double> z(30, 0.0);
  for (std::size_t n = 1; n < 30; ++n) z[n] = x[n - 1];
  LatticeEngine<double> eng({1, 2});
  for (std::size_t t = 0; t < 30; ++t) {
    const auto& e = eng.step(block(z, 1, t), block(x, 1, t));
    for (std::size_t p = 1; p <= 2; ++p) {
      if (t == 0) continue;  // no regressor energy at all yet
      const double want = oracle_residual(z, x, 1, p, t, 0);
      EXPECT_TRUE(close(e(0, p), want)) << "t=" << t << " p=" << p << " " << e(0, p) << " vs "
                                        << want;
    }
  }
}

TEST(EngineStep, MatchesOracleForTwoChannels) {
  std::mt19937_64 rng(22);
  const std::size_t m = 2, n = 4, blocks = 12;
  const auto z = randn(rng, m * blocks), d = randn(rng, m * blocks);
  LatticeEngine<double> eng({m, n});
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto& e = eng.step(block(z, m, k), block(d, m, k));
    const std::size_t t = m * k + m - 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 1; p <= n; ++p) {
        const double want = oracle_residual(z, d, m, p, t, i);
        EXPECT_TRUE(close(e(i, p), want)) << "k=" << k << " i=" << i << " p=" << p;
      }
  }
}

TEST(EngineStep, ForgettingFactorMatchesWeightedOracle) {
  std::mt19937_64 rng(23);
  const std::size_t m = 2, n = 4, blocks = 14;
  const double lambda = 0.9;
  const auto z = randn(rng, m * blocks), d = randn(rng, m * blocks);
  LatticeEngine<double> eng({m, n, 1e-12, lambda});
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto& e = eng.step(block(z, m, k), block(d, m, k));
    const std::size_t t = m * k + m - 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 1; p <= n; ++p)
        EXPECT_TRUE(close(e(i, p), oracle_residual(z, d, m, p, t, i, lambda), 1e-7))
            << "k=" << k << " i=" << i << " p=" << p;
  }
}

TEST(EngineStep, SelfGeneratedResidualCollapses) {
  std::mt19937_64 rng(24);
  const std::size_t m = 2, n = 4, blocks = 200;
  const ChannelInputs<double> w({randn(rng, blocks), randn(rng, blocks)});
  const SerializedFilterSet<double> g({randn(rng, n), randn(rng, n)});
  const auto z = interleave(w);
  const auto d = synthesize_serialized(g, z);
  const std::vector<double> zv(z.samples().begin(), z.samples().end());
  LatticeEngine<double> eng({m, n});
  for (std::size_t k = 0; k < blocks; ++k) eng.step(block(zv, m, k), block(d, m, k));
  for (double e : eng.residuals(n)) EXPECT_LT(std::abs(e), 1e-6);
}

TEST(EngineStep, LikelihoodStaysInUnitInterval) {
  std::mt19937_64 rng(25);
  const std::size_t m = 3, n = 6;
  LatticeEngine<double> eng({m, n});
  for (int k = 0; k < 60; ++k) {
    const auto z = randn(rng, m), d = randn(rng, m);
    eng.step(z, d);
    for (std::size_t i = 0; i < m; ++i)
      for (double g : eng.phase(i).gamma) {
        EXPECT_GT(g, 0.0);
        EXPECT_LE(g, 1.0);
      }
  }
}

TEST(EngineStep, AccumulatedCostIsExactAndMonotoneInOrder) {
  std::mt19937_64 rng(26);
  const std::size_t m = 2, n = 6, blocks = 30;
  const auto z = randn(rng, m * blocks), d = randn(rng, m * blocks);
  LatticeEngine<double> eng({m, n});
  for (std::size_t k = 0; k < blocks; ++k) {
    eng.step(block(z, m, k), block(d, m, k));
    const std::size_t t = m * k + m - 1;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 1; p <= n; ++p) {
        EXPECT_LE(eng.energy(i, p), eng.energy(i, p - 1) * (1 + 1e-12) + 1e-12);
        if (k < 10) continue;
        auto zm = build_data_matrix<double>(z, p, t, m);
        const double cost = residual_row(desired_row<double>(d, zm, i), zm, {1e-18}).squaredNorm();
        EXPECT_TRUE(close(eng.energy(i, p), cost, 1e-7)) << k << " " << i << " " << p;
      }
    }
  }
}

TEST(EngineAccessors, ResidualsReadTheLatestStep) {
  LatticeEngine<double> eng({2, 2});
  EXPECT_THROW(eng.residuals(0), Error);
  const std::vector<double> z{0.3, -1.2}, d{2.0, 5.0};
  const auto e = eng.step(z, d);
  const auto r0 = eng.residuals(0);
  EXPECT_EQ(r0[0], 5.0);  // band 0 is the newest sample of the block
  EXPECT_EQ(r0[1], 2.0);
  for (std::size_t p = 0; p <= 2; ++p)
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(eng.residuals(p)[i], e(i, p));
  EXPECT_THROW(eng.residuals(3), DimensionError);
}

TEST(EngineDeterminism, SameInputsGiveIdenticalState) {
  std::mt19937_64 rng(27);
  const auto z = randn(rng, 40), d = randn(rng, 40);
  LatticeEngine<double> a({2, 4}), b({2, 4});
  EXPECT_TRUE(a == b);
  for (std::size_t k = 0; k < 20; ++k) {
    a.step(block(z, 2, k), block(d, 2, k));
    b.step(block(z, 2, k), block(d, 2, k));
  }
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(EngineSnapshot, IsUnaffectedByLaterSteps) {
  std::mt19937_64 rng(28);
  const auto z = randn(rng, 40), d = randn(rng, 40);
  LatticeEngine<double> eng({2, 4});
  const auto fresh = eng.snapshot();
  EXPECT_TRUE(fresh == LatticeEngine<double>({2, 4}).snapshot());
  for (std::size_t k = 0; k < 10; ++k) eng.step(block(z, 2, k), block(d, 2, k));
  const auto snap = eng.snapshot();
  const auto copy = snap;
  for (std::size_t k = 10; k < 20; ++k) eng.step(block(z, 2, k), block(d, 2, k));
  EXPECT_TRUE(snap == copy);
  EXPECT_FALSE(snap == eng.snapshot());
}

TEST(EngineDump, SortedKeyValueLines) {
  std::mt19937_64 rng(29);
  LatticeEngine<double> eng({2, 2});
  eng.step(randn(rng, 2), randn(rng, 2));
  const std::string text = eng.dump();
  std::istringstream in(text);
  std::string line, prev;
  const std::regex pat(R"(^[a-z_]+\[\d+\]\[\d+\]=[-+0-9.eE]+$)");
  std::size_t count = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(std::regex_match(line, pat)) << line;
    const std::string key = line.substr(0, line.find('='));
    EXPECT_LT(prev, key);
    prev = key;
    ++count;
  }
  // alpha, beta, likelihood, e for p = 0..2 and four more for p = 0..1.
  EXPECT_EQ(count, 2u * (4 * 3 + 4 * 2));
  EXPECT_NE(text.find("e[0][0]="), std::string::npos);
}

TEST(EngineGuards, ZeroEpsilonOnStartupIsIllConditioned) {
  std::mt19937_64 rng(30);
  LatticeEngine<double> eng({2, 4, 0.0});
  EXPECT_THROW(eng.step(randn(rng, 2), randn(rng, 2)), IllConditionedError);
}

TEST(EngineCost, OperationCountIsLinearInMN) {
  std::mt19937_64 rng(31);
  for (std::size_t m : {1, 2, 4})
    for (std::size_t mult : {1, 2, 4, 8}) {
      const std::size_t n = m * mult;
      LatticeEngine<double> eng({m, n});
      for (int k = 0; k < 5; ++k) eng.step(randn(rng, m), randn(rng, m));
      const double per_block_mul = static_cast<double>(eng.ops().mul + eng.ops().div) / 5.0;
      const double per_block_add = static_cast<double>(eng.ops().add) / 5.0;
      const double mn = static_cast<double>(m * n);
      // Within a factor of two of 18MN multiplications and 9MN additions.
      EXPECT_GE(per_block_mul, 0.5 * 18 * mn);
      EXPECT_LE(per_block_mul, 2.0 * 18 * mn);
      EXPECT_GE(per_block_add, 0.5 * 9 * mn);
      EXPECT_LE(per_block_add, 2.0 * 9 * mn);
    }
}

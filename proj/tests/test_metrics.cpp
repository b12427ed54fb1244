#include <gtest/gtest.h>

#include <cmath>

#include "drlpa/metrics.hpp"

using namespace drlpa;

namespace {

// Two cells, one user each, each cell in the other's neighborhood.
struct Toy {
  NetworkScenario s = NetworkScenario::from_neighborhoods(2, 1, {{1}, {0}});
  ChannelState c = ChannelState::unit(s);
};

// Direct SINR from a dense gain table g[tx][rx_link].
std::vector<double> dense_sinr(const std::vector<std::vector<double>>& g, const std::vector<double>& p,
                               const std::vector<int>& cell_of, double noise) {
  const std::size_t L = p.size();
  std::vector<double> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    double interf = noise;
    for (std::size_t j = 0; j < L; ++j)
      if (j != l) interf += g[cell_of[j]][l] * p[j];
    out[l] = g[cell_of[l]][l] * p[l] / interf;
  }
  return out;
}

}  // namespace

TEST(Sinr, SingleLinkNoiseOnly) {
  auto s = NetworkScenario::from_neighborhoods(1, 1, {{}});
  auto c = ChannelState::unit(s);
  c.g = {0.1};
  const std::vector<double> p = {1.0};
  EXPECT_DOUBLE_EQ(compute_sinr(s, c, p, 0.1)[0], 1.0);
}

TEST(Sinr, ZeroPowerGivesZero) {
  const auto s = build_scenario(25, 4, 0.01, 1.0, 8.0, 1);
  const auto c = init_channel(s, 10.0, 0.02, 2);
  const std::vector<double> p(s.n_links(), 0.0);
  for (double v : compute_sinr(s, c, p, RadioParams{})) EXPECT_EQ(v, 0.0);
}

TEST(Sinr, HandEvaluatedTwoCellToy) {
  Toy t;
  // layout [link * stride + slot]; slot 0 own BS, slot 1 the other BS
  t.c.g = {1.0, 0.5, 1.0, 0.25};
  const std::vector<double> p = {1.0, 1.0};
  const auto sinr = compute_sinr(t.s, t.c, p, 0.1);
  EXPECT_NEAR(sinr[0], 1.0 / 0.6, 1e-12);
  EXPECT_NEAR(sinr[1], 1.0 / 0.35, 1e-12);
}

TEST(Sinr, MatchesDenseOracleOnRandomScenario) {
  // Two cells, three users: co-cell interference plus the neighbor cell.
  auto s = NetworkScenario::from_neighborhoods(2, 3, {{1}, {0}});
  auto c = ChannelState::unit(s);
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (double& g : c.g) g = u(rng);
  std::vector<double> p(6);
  for (double& v : p) v = u(rng);
  std::vector<std::vector<double>> dense(2, std::vector<double>(6));
  std::vector<int> cell_of(6);
  for (int l = 0; l < 6; ++l) {
    cell_of[l] = l / 3;
    dense[cell_of[l]][l] = c.gain(l, 0);
    dense[1 - cell_of[l]][l] = c.gain(l, 1);
  }
  const auto want = dense_sinr(dense, p, cell_of, 0.05);
  const auto got = compute_sinr(s, c, p, 0.05);
  for (int l = 0; l < 6; ++l) EXPECT_NEAR(got[l], want[l], 1e-12 * want[l]);
}

TEST(Rate, CapThenLog) {
  EXPECT_DOUBLE_EQ(rate_of(1.0, 1000.0), 1.0);
  EXPECT_DOUBLE_EQ(rate_of(0.0, 1000.0), 0.0);
  EXPECT_NEAR(rate_of(1e6, db_to_linear(30.0)), std::log2(1001.0), 1e-12);
  EXPECT_NEAR(std::log2(1001.0), 9.967, 1e-3);
  const std::vector<double> sinr = {1.0, 1e6, 0.0};
  const auto r = compute_rates(sinr, 1000.0);
  EXPECT_NEAR(r.sum_rate, 1.0 + std::log2(1001.0), 1e-12);
  EXPECT_DOUBLE_EQ(r.sinr[1], 1000.0);
  EXPECT_NEAR(sum_rate_per_ap(r), r.sum_rate / 3.0, 1e-15);
}

TEST(Rate, RejectsNegativeSinr) {
  const std::vector<double> sinr = {-1.0};
  EXPECT_THROW(compute_rates(sinr, 1000.0), std::invalid_argument);
}

TEST(Reward, AlphaZeroIsOwnRate) {
  const auto s = build_scenario(25, 4, 0.01, 1.0, 8.0, 4);
  std::vector<double> rates(s.n_links());
  for (int l = 0; l < s.n_links(); ++l) rates[l] = 0.1 * l;
  const auto r = local_rewards(s, rates, 0.0);
  for (int l = 0; l < s.n_links(); ++l) EXPECT_DOUBLE_EQ(r[l], rates[l]);
}

TEST(Reward, TwoCellToy) {
  Toy t;
  const std::vector<double> rates = {1.5, 2.25};
  const auto r = local_rewards(t.s, rates, 1.0);
  EXPECT_DOUBLE_EQ(r[0], 3.75);
  EXPECT_DOUBLE_EQ(r[1], 3.75);
  EXPECT_DOUBLE_EQ(local_reward(t.s, rates, 0, 0, 0.5), 1.5 + 0.5 * 2.25);
}

TEST(Reward, BatchedMatchesPerLink) {
  const auto s = build_scenario(25, 4, 0.01, 1.0, 8.0, 5);
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<double> rates(s.n_links());
  for (double& v : rates) v = u(rng);
  for (double alpha : {0.0, 0.3, 1.0}) {
    const auto all = local_rewards(s, rates, alpha);
    for (int n = 0; n < 25; ++n)
      for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(all[link_index(n, k, 4)], local_reward(s, rates, n, k, alpha), 1e-12);
  }
  EXPECT_THROW(local_rewards(s, rates, -0.1), std::invalid_argument);
}

TEST(Reward, MultiplicityOnSymmetricTorus) {
  // 1 own + alpha (K - 1) co-cell + alpha |D| K neighborhood
  const auto s = build_scenario(25, 4, 0.01, 1.0, 8.0, 6);
  for (double m : reward_multiplicities(s, 1.0)) EXPECT_DOUBLE_EQ(m, 1.0 + 3.0 + 18.0 * 4.0);
  for (double m : reward_multiplicities(s, 0.5)) EXPECT_DOUBLE_EQ(m, 1.0 + 0.5 * (3.0 + 72.0));
}

TEST(Reward, SumIsProportionalToSumRate) {
  const auto s = build_scenario(25, 4, 0.01, 1.0, 8.0, 7);
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rates(s.n_links());
    for (double& v : rates) v = u(rng);
    double sr = 0.0, sc = 0.0;
    for (double v : local_rewards(s, rates, 1.0)) sr += v;
    for (double v : rates) sc += v;
    EXPECT_NEAR(sr / (76.0 * sc), 1.0, 1e-12);
  }
}

TEST(Power, Bounds) {
  const std::vector<double> ok = {0.0, 3.0, 6309.6};
  const std::vector<double> bad = {-1e-9, 3.0};
  EXPECT_TRUE(within_power_bounds(ok, 6309.6));
  EXPECT_FALSE(within_power_bounds(bad, 6309.6));
  EXPECT_NEAR(RadioParams{}.p_max_mw, 6309.57, 0.01);
  EXPECT_NEAR(RadioParams{}.p_min_mw, 3.1623, 1e-4);
}

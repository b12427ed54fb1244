#include <gtest/gtest.h>

#include <functional>

#include "drlpa/greedy_oracle.hpp"
#include "drlpa/tracking.hpp"

using namespace drlpa;

TEST(Tracking, PerfectCriticSkips) {
  TrackingController t({10, 0.05});
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_EQ(t.step(v, v), TrackingDecision::kSkip);
  EXPECT_DOUBLE_EQ(t.loss(), 0.0);
}

TEST(Tracking, ZeroCriticTrains) {
  TrackingController t({10, 0.49});
  const std::vector<double> q(10, 0.0), r(10, 1.0);
  EXPECT_EQ(t.step(q, r), TrackingDecision::kTrain);
  EXPECT_DOUBLE_EQ(t.loss(), 0.5);
  EXPECT_TRUE(t.full());
}

TEST(Tracking, TenPercentOvershoot) {
  TrackingController t({20, 0.05});
  std::vector<double> q, r;
  for (int i = 1; i <= 20; ++i) {
    r.push_back(i);
    q.push_back(1.1 * i);
  }
  t.step(q, r);
  EXPECT_NEAR(t.loss(), 0.005, 1e-12);
}

TEST(Tracking, WindowRollsAndSkipsZeroRewards) {
  TrackingController t({3, 0.05});
  t.push(0.0, 1.0);
  t.push(5.0, 0.0);
  EXPECT_EQ(t.size(), 1);
  t.push(1.0, 1.0);
  t.push(1.0, 1.0);
  t.push(1.0, 1.0);
  EXPECT_EQ(t.size(), 3);
  EXPECT_DOUBLE_EQ(t.loss(), 0.0);
  t.clear();
  EXPECT_THROW(t.loss(), std::logic_error);
  EXPECT_THROW(TrackingController({0, 0.05}), std::invalid_argument);
}

TEST(Tracking, ScaleInvariance) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> q(50), r(50);
  for (int i = 0; i < 50; ++i) {
    q[i] = u(rng);
    r[i] = u(rng);
  }
  TrackingController a({50, 0.05}), b({50, 0.05});
  a.step(q, r);
  for (int i = 0; i < 50; ++i) {
    q[i] *= 37.5;
    r[i] *= 37.5;
  }
  b.step(q, r);
  EXPECT_NEAR(a.loss(), b.loss(), 1e-14 * a.loss());
}

namespace {

// Best expected total over all time-dependent deterministic policies,
// enumerated explicitly: every map (t, s) -> a.
double brute_force_optimum(const ToyMdp& m) {
  const int slots = m.horizon * m.n_states;
  std::vector<int> plan(slots, 0);
  double best = -1e300;
  for (;;) {
    std::vector<double> d = m.initial;
    double total = 0.0;
    for (int t = 0; t < m.horizon; ++t) {
      std::vector<double> next(m.n_states, 0.0);
      for (int s = 0; s < m.n_states; ++s) {
        const int a = plan[t * m.n_states + s];
        for (int s2 = 0; s2 < m.n_states; ++s2) {
          total += d[s] * m.transition[a][s][s2] * m.reward[s][a][s2];
          next[s2] += d[s] * m.transition[a][s][s2];
        }
      }
      d = next;
    }
    best = std::max(best, total);
    int i = 0;
    while (i < slots && ++plan[i] == m.n_actions) plan[i++] = 0;
    if (i == slots) break;
  }
  return best / m.horizon;
}

}  // namespace

TEST(GreedyOracle, GreedyMatchesBruteForceOnRandomMdps) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_toy_mdp(rng);
    ASSERT_TRUE(m.action_independent_transitions());
    const auto res = verify_greedy_optimality(m);
    EXPECT_TRUE(res.accepted) << "mdp " << i;
    EXPECT_EQ(res.greedy_value, brute_force_optimum(m)) << "mdp " << i;
  }
}

TEST(GreedyOracle, TwoStateTwoActionHorizonThree) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    ToyMdp m;
    m.n_states = 2;
    m.n_actions = 2;
    m.horizon = 3;
    m.initial = random_dyadic_distribution(2, rng);
    std::vector<std::vector<double>> kernel = {random_dyadic_distribution(2, rng), random_dyadic_distribution(2, rng)};
    m.transition = {kernel, kernel};
    std::uniform_int_distribution<int> rr(-10, 10);
    m.reward.assign(2, std::vector<std::vector<double>>(2));
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) m.reward[s][a].assign(2, rr(rng));
    const auto res = verify_greedy_optimality(m);
    EXPECT_TRUE(res.hypothesis_holds);
    EXPECT_TRUE(res.greedy_optimal);
    EXPECT_EQ(res.optimal_value, brute_force_optimum(m));
  }
}

TEST(GreedyOracle, RewardTrapIsRejected) {
  const auto m = reward_trap_counterexample();
  const auto res = verify_greedy_optimality(m);
  EXPECT_FALSE(res.hypothesis_holds);
  EXPECT_FALSE(res.greedy_optimal);
  EXPECT_FALSE(res.accepted);
  EXPECT_DOUBLE_EQ(res.greedy_value, 1.0);
  EXPECT_NEAR(res.optimal_value, 20.0 / 3.0, 1e-12);
  EXPECT_NEAR(brute_force_optimum(m), 20.0 / 3.0, 1e-12);
}

TEST(GreedyOracle, SingleActionIsTrivial) {
  ToyMdp m;
  m.n_states = 3;
  m.n_actions = 1;
  m.horizon = 4;
  m.initial = {0.5, 0.25, 0.25};
  m.transition = {{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {1.0, 0.0, 0.0}}};
  m.reward = {{{1, 1, 1}}, {{2, 2, 2}}, {{-3, -3, -3}}};
  const auto res = verify_greedy_optimality(m);
  EXPECT_TRUE(res.accepted);
  EXPECT_EQ(res.policies_enumerated, 1);
}

TEST(GreedyOracle, NextStateDependentRewardBreaksHypothesis) {
  auto m = reward_trap_counterexample();
  m.transition = {m.transition[0], m.transition[0]};
  m.reward[0][0] = {1.0, 4.0};
  EXPECT_TRUE(m.action_independent_transitions());
  EXPECT_FALSE(m.state_action_rewards());
  EXPECT_FALSE(verify_greedy_optimality(m).accepted);
}

TEST(GreedyOracle, RejectsMalformedSpec) {
  ToyMdp m;
  m.n_states = 2;
  m.n_actions = 1;
  m.initial = {1.0};
  EXPECT_THROW(verify_greedy_optimality(m), std::invalid_argument);
}

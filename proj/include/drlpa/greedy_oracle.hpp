#pragma once

// Brute-force check, on small finite MDPs, that per-step greedy action choice
// attains the optimal finite-horizon cumulative reward whenever transitions
// ignore the action and rewards depend on (state, action) only.
//
// Rewards are integers and probabilities multiples of 1/8, so every value
// below is an exact dyadic rational in double precision and comparisons are
// exact equalities.

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "drlpa/common.hpp"

namespace drlpa {

struct ToyMdp {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 1;
  std::vector<double> initial;                             // [s]
  std::vector<std::vector<std::vector<double>>> transition;  // [a][s][s']
  std::vector<std::vector<std::vector<double>>> reward;      // [s][a][s']

  void validate() const {
    if (n_states < 1 || n_actions < 1 || horizon < 1) throw std::invalid_argument("toy mdp needs >= 1 state, action, step");
    if (static_cast<int>(initial.size()) != n_states) throw std::invalid_argument("initial distribution size");
    if (static_cast<int>(transition.size()) != n_actions) throw std::invalid_argument("transition kernel size");
    if (static_cast<int>(reward.size()) != n_states) throw std::invalid_argument("reward table size");
  }

  bool action_independent_transitions() const {
    for (int a = 1; a < n_actions; ++a)
      if (transition[a] != transition[0]) return false;
    return true;
  }

  bool state_action_rewards() const {
    for (const auto& per_a : reward)
      for (const auto& row : per_a)
        if (std::any_of(row.begin(), row.end(), [&](double v) { return v != row.front(); })) return false;
    return true;
  }

  /// E[r | s, a] under the action's kernel.
  double expected_reward(int s, int a) const {
    double acc = 0.0;
    for (int s2 = 0; s2 < n_states; ++s2) acc += transition[a][s][s2] * reward[s][a][s2];
    return acc;
  }
};

/// Sum over t = 1..T of expected rewards under a stationary deterministic
/// policy (the 1/T average is applied by the caller).
inline double toy_total_reward(const ToyMdp& m, const std::vector<int>& policy) {
  std::vector<double> d = m.initial;
  double total = 0.0;
  for (int t = 0; t < m.horizon; ++t) {
    std::vector<double> next(m.n_states, 0.0);
    for (int s = 0; s < m.n_states; ++s) {
      if (d[s] == 0.0) continue;
      const int a = policy[s];
      total += d[s] * m.expected_reward(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) next[s2] += d[s] * m.transition[a][s][s2];
    }
    d = std::move(next);
  }
  return total;
}

struct GreedyOptimalityResult {
  bool hypothesis_holds = false;
  bool greedy_optimal = false;
  bool accepted = false;  // hypothesis holds and greedy attains the optimum
  double greedy_value = 0.0;
  double optimal_value = 0.0;
  int policies_enumerated = 0;
};

inline std::vector<int> greedy_policy(const ToyMdp& m) {
  std::vector<int> pi(m.n_states, 0);
  for (int s = 0; s < m.n_states; ++s) {
    double best = m.expected_reward(s, 0);
    for (int a = 1; a < m.n_actions; ++a) {
      const double v = m.expected_reward(s, a);
      if (v > best) {
        best = v;
        pi[s] = a;
      }
    }
  }
  return pi;
}

/// Enumerates all n_actions^n_states stationary deterministic policies and
/// also runs backward induction over time-dependent policies; the optimum is
/// the larger of the two (they coincide under the hypothesis).
inline GreedyOptimalityResult verify_greedy_optimality(const ToyMdp& m) {
  m.validate();
  GreedyOptimalityResult res;
  res.hypothesis_holds = m.action_independent_transitions() && m.state_action_rewards();

  std::vector<int> pi(m.n_states, 0);
  double best = toy_total_reward(m, pi);
  res.policies_enumerated = 1;
  for (;;) {
    int i = 0;
    while (i < m.n_states && ++pi[i] == m.n_actions) pi[i++] = 0;
    if (i == m.n_states) break;
    best = std::max(best, toy_total_reward(m, pi));
    ++res.policies_enumerated;
  }

  std::vector<double> v(m.n_states, 0.0);
  for (int t = 0; t < m.horizon; ++t) {
    std::vector<double> nv(m.n_states);
    for (int s = 0; s < m.n_states; ++s) {
      double q_best = 0.0;
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.expected_reward(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) q += m.transition[a][s][s2] * v[s2];
        if (a == 0 || q > q_best) q_best = q;
      }
      nv[s] = q_best;
    }
    v = std::move(nv);
  }
  double dp = 0.0;
  for (int s = 0; s < m.n_states; ++s) dp += m.initial[s] * v[s];

  res.optimal_value = std::max(best, dp) / m.horizon;
  res.greedy_value = toy_total_reward(m, greedy_policy(m)) / m.horizon;
  res.greedy_optimal = res.greedy_value == res.optimal_value;
  res.accepted = res.hypothesis_holds && res.greedy_optimal;
  return res;
}

/// Random dyadic distribution over n outcomes (multiples of 1/8).
inline std::vector<double> random_dyadic_distribution(int n, Rng& rng) {
  std::vector<int> eighths(n, 0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int i = 0; i < 8; ++i) ++eighths[pick(rng)];
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = eighths[i] / 8.0;
  return p;
}

/// Random MDP satisfying the hypothesis: one kernel shared by all actions,
/// integer rewards in [-10, 10] depending on (s, a) only.
inline ToyMdp random_toy_mdp(Rng& rng, int max_states = 4, int max_actions = 3, int max_horizon = 4) {
  std::uniform_int_distribution<int> ns(1, max_states), na(1, max_actions), nt(1, max_horizon), rr(-10, 10);
  ToyMdp m;
  m.n_states = ns(rng);
  m.n_actions = na(rng);
  m.horizon = nt(rng);
  m.initial = random_dyadic_distribution(m.n_states, rng);
  std::vector<std::vector<double>> kernel(m.n_states);
  for (auto& row : kernel) row = random_dyadic_distribution(m.n_states, rng);
  m.transition.assign(m.n_actions, kernel);
  m.reward.assign(m.n_states, std::vector<std::vector<double>>(m.n_actions));
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) m.reward[s][a].assign(m.n_states, static_cast<double>(rr(rng)));
  return m;
}

/// Two states, two actions, horizon 3. In state 0 action 0 pays 1 and stays,
/// action 1 pays 0 and moves to state 1, which pays 10 per step forever.
inline ToyMdp reward_trap_counterexample() {
  ToyMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.horizon = 3;
  m.initial = {1.0, 0.0};
  m.transition = {{{1.0, 0.0}, {0.0, 1.0}}, {{0.0, 1.0}, {0.0, 1.0}}};
  m.reward = {{{1.0, 1.0}, {0.0, 0.0}}, {{10.0, 10.0}, {10.0, 10.0}}};
  return m;
}

}  // namespace drlpa

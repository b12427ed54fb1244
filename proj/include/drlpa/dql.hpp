#pragma once

// Value-based agent: Q(s, .) regressed onto the immediate reward of the
// chosen action, epsilon-greedy exploration with a linear schedule.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "drlpa/action_codec.hpp"
#include "drlpa/neural.hpp"
#include "drlpa/policy.hpp"
#include "drlpa/reinforce.hpp"

namespace drlpa {

struct EpsilonSchedule {
  double first = 0.2;
  double last = 1e-4;
  int n_episodes = 5000;

  /// eps_k = eps_1 + (k - 1) / (N_e - 1) (eps_Ne - eps_1), k in 1..N_e.
  double at(int episode) const {
    if (n_episodes <= 1) return first;
    const int k = std::clamp(episode, 1, n_episodes);
    return std::lerp(first, last, static_cast<double>(k - 1) / (n_episodes - 1));
  }
};

/// Epsilon-greedy choice over the Q values of one state.
inline int dql_select(std::span<const double> q, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (epsilon > 0.0 && unit(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q.size()) - 1);
    return pick(rng);
  }
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

inline int dql_select(const Mlp& q_net, std::span<const double> state, double epsilon, Rng& rng) {
  return dql_select(q_net.predict(state), epsilon, rng);
}

class DqlAgent final : public PowerPolicy {
 public:
  DqlAgent(int input_dim, ActionCodec codec, double learning_rate, EpsilonSchedule schedule,
           const std::vector<int>& hidden, Rng& rng)
      : codec_(std::move(codec)), lr_(learning_rate), schedule_(schedule) {
    auto specs = hidden_specs(hidden);
    specs.push_back({codec_.size(), Activation::kLinear});
    q_ = Mlp(input_dim, specs, rng);
  }

  DqlAgent(Mlp q, ActionCodec codec, double learning_rate, EpsilonSchedule schedule)
      : q_(std::move(q)), codec_(std::move(codec)), lr_(learning_rate), schedule_(schedule) {}

  AgentKind kind() const override { return AgentKind::kDql; }

  Decision act(std::span<const double> state, const ActContext& ctx) const override {
    return act_batch(Mlp::as_column(state), ctx).front();
  }

  std::vector<Decision> act_batch(const Matrix& states, const ActContext& ctx) const override {
    ForwardCache cache;
    const Matrix& q = q_.forward(states, cache);
    const double eps = (ctx.explore && ctx.rng) ? schedule_.at(ctx.episode) : 0.0;
    std::vector<Decision> out(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      int a = 0;
      if (eps > 0.0)
        a = dql_select(std::span<const double>(q.col(c).data(), q.rows()), eps, *ctx.rng);
      else
        q.col(c).maxCoeff(&a);
      out[c] = {codec_.power_of(a), a};
    }
    return out;
  }

  /// Descends 1/2 (Q(s, a) - r)^2 on the chosen action's output only.
  LearnStats learn(const SlotContext& ctx) override {
    LearnStats st;
    if (ctx.transitions.empty()) return st;
    ForwardCache cache;
    const Matrix& q = q_.forward(stack_states(ctx.transitions), cache);
    Matrix upstream = Matrix::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      const auto& t = ctx.transitions[c];
      const double resid = q(t.action, c) - t.reward;
      upstream(t.action, c) = resid;
      loss += 0.5 * resid * resid;
    }
    GradientTape tape = q_.make_tape();
    q_.backward(cache, upstream, tape);
    if (!tape.finite()) {
      st.skipped = static_cast<int>(ctx.transitions.size());
      return st;
    }
    q_.adam_step(tape, lr_);
    st.loss = loss;
    st.applied = true;
    return st;
  }

  std::vector<double> value_estimates(const SlotContext& ctx) const override {
    std::vector<double> out;
    if (ctx.transitions.empty()) return out;
    ForwardCache cache;
    const Matrix& q = q_.forward(stack_states(ctx.transitions), cache);
    for (Eigen::Index c = 0; c < q.cols(); ++c) out.push_back(q(ctx.transitions[c].action, c));
    return out;
  }

  const EpsilonSchedule& schedule() const { return schedule_; }
  const Mlp& network() const { return q_; }
  Mlp& network() { return q_; }
  const ActionCodec& codec() const { return codec_; }

  nlohmann::json to_json() const override {
    return {{"agent", name()},
            {"schedule", {{"epsilon_first", schedule_.first}, {"epsilon_last", schedule_.last},
                          {"n_episodes", schedule_.n_episodes}}},
            {"networks", {{"q", q_.to_json()}}}};
  }

 private:
  Mlp q_;
  ActionCodec codec_;
  double lr_;
  EpsilonSchedule schedule_;
};

}  // namespace drlpa

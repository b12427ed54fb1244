#pragma once

// Policy-gradient agent over the discrete power levels with reward
// whitening.

#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "drlpa/action_codec.hpp"
#include "drlpa/neural.hpp"
#include "drlpa/policy.hpp"

namespace drlpa {

inline constexpr double kWhiteningStdFloor = 1e-8;

/// (r - mean) / std over the batch (population std). A batch whose std is
/// below the floor whitens to all zeros.
inline std::vector<double> whiten_rewards(std::span<const double> r) {
  std::vector<double> out(r.size(), 0.0);
  if (r.empty()) return out;
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd < kWhiteningStdFloor) return out;
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - mean) / sd;
  return out;
}

inline std::vector<LayerSpec> hidden_specs(const std::vector<int>& hidden) {
  std::vector<LayerSpec> specs;
  for (int h : hidden) specs.push_back({h, Activation::kRelu});
  return specs;
}

class ReinforceAgent final : public PowerPolicy {
 public:
  ReinforceAgent(int input_dim, ActionCodec codec, double learning_rate, const std::vector<int>& hidden, Rng& rng)
      : codec_(std::move(codec)), lr_(learning_rate) {
    auto specs = hidden_specs(hidden);
    specs.push_back({codec_.size(), Activation::kSoftmax});
    policy_ = Mlp(input_dim, specs, rng);
  }

  ReinforceAgent(Mlp policy, ActionCodec codec, double learning_rate)
      : policy_(std::move(policy)), codec_(std::move(codec)), lr_(learning_rate) {}

  AgentKind kind() const override { return AgentKind::kReinforce; }

  Decision act(std::span<const double> state, const ActContext& ctx) const override {
    return act_batch(Mlp::as_column(state), ctx).front();
  }

  std::vector<Decision> act_batch(const Matrix& states, const ActContext& ctx) const override {
    ForwardCache cache;
    const Matrix& probs = policy_.forward(states, cache);
    std::vector<Decision> out(static_cast<std::size_t>(states.cols()));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      int a = 0;
      if (ctx.explore && ctx.rng) {
        // Inverse-CDF draw from pi(.|s).
        const double u = unit(*ctx.rng);
        double acc = 0.0;
        a = static_cast<int>(probs.rows()) - 1;
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
          acc += probs(i, c);
          if (u < acc) {
            a = static_cast<int>(i);
            break;
          }
        }
      } else {
        probs.col(c).maxCoeff(&a);
      }
      out[c] = {codec_.power_of(a), a};
    }
    return out;
  }

  /// One ascent step on sum_i r~_i ln pi(a_i | s_i) with rewards whitened
  /// over the batch.
  LearnStats learn(const SlotContext& ctx) override {
    LearnStats st;
    if (ctx.transitions.empty()) return st;
    std::vector<double> rewards;
    rewards.reserve(ctx.transitions.size());
    for (const auto& t : ctx.transitions) rewards.push_back(t.reward);
    const auto white = whiten_rewards(rewards);

    ForwardCache cache;
    const Matrix& probs = policy_.forward(stack_states(ctx.transitions), cache);
    // d(-r~ ln pi_a)/dz = -r~ (e_a - pi)
    Matrix upstream(probs.rows(), probs.cols());
    double loss = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const int a = ctx.transitions[c].action;
      const double rw = white[c];
      upstream.col(c) = rw * probs.col(c);
      upstream(a, c) -= rw;
      const auto logp = log_softmax(std::span<const double>(cache.pre.back().col(c).data(), probs.rows()));
      loss -= rw * logp[a];
    }
    GradientTape tape = policy_.make_tape();
    policy_.backward(cache, upstream, tape, GradientAt::kPreActivation);
    if (!tape.finite()) {
      st.skipped = static_cast<int>(ctx.transitions.size());
      return st;
    }
    policy_.adam_step(tape, lr_);
    st.loss = loss;
    st.applied = true;
    return st;
  }

  std::vector<double> probabilities(std::span<const double> state) const { return policy_.predict(state); }

  const Mlp& network() const { return policy_; }
  Mlp& network() { return policy_; }
  const ActionCodec& codec() const { return codec_; }

  nlohmann::json to_json() const override {
    return {{"agent", name()}, {"networks", {{"policy", policy_.to_json()}}}};
  }

 private:
  Mlp policy_;
  ActionCodec codec_;
  double lr_;
};

}  // namespace drlpa

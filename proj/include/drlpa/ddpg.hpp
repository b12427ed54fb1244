#pragma once

// Actor-critic agent with a deterministic continuous power and a
// semi-model-free critic: the critic sees the sorted local rates, which the
// analytic rate model computes from the actor's power.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "drlpa/critic_state.hpp"
#include "drlpa/neural.hpp"
#include "drlpa/policy.hpp"
#include "drlpa/reinforce.hpp"

namespace drlpa {

/// clamp(a + n, 0, P_max), n ~ U(-P_max / k, P_max / k).
inline double ddpg_explore(double action_mw, double p_max_mw, int episode, Rng& rng) {
  if (episode < 1) throw std::invalid_argument("episode index starts at 1");
  const double width = p_max_mw / episode;
  std::uniform_real_distribution<double> noise(-width, width);
  return std::clamp(action_mw + noise(rng), 0.0, p_max_mw);
}

class DdpgAgent final : public PowerPolicy {
 public:
  DdpgAgent(int input_dim, int i_c, RadioParams radio, double lr_actor, double lr_critic,
            const std::vector<int>& actor_hidden, const std::vector<int>& critic_hidden, Rng& rng)
      : i_c_(i_c), radio_(radio), lr_actor_(lr_actor), lr_critic_(lr_critic) {
    auto a = hidden_specs(actor_hidden);
    a.push_back({1, Activation::kScaledSigmoid, radio.p_max_mw});
    actor_ = Mlp(input_dim, a, rng);
    auto c = hidden_specs(critic_hidden);
    c.push_back({1, Activation::kLinear});
    critic_ = Mlp(i_c, c, rng);
  }

  DdpgAgent(Mlp actor, Mlp critic, RadioParams radio, double lr_actor, double lr_critic)
      : actor_(std::move(actor)),
        critic_(std::move(critic)),
        i_c_(critic_.input_dim()),
        radio_(radio),
        lr_actor_(lr_actor),
        lr_critic_(lr_critic) {}

  AgentKind kind() const override { return AgentKind::kDdpg; }

  Decision act(std::span<const double> state, const ActContext& ctx) const override {
    return act_batch(Mlp::as_column(state), ctx).front();
  }

  std::vector<Decision> act_batch(const Matrix& states, const ActContext& ctx) const override {
    ForwardCache cache;
    const Matrix& a = actor_.forward(states, cache);
    std::vector<Decision> out(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      double p = a(0, c);
      if (ctx.explore && ctx.rng) p = ddpg_explore(p, radio_.p_max_mw, ctx.episode, *ctx.rng);
      out[c] = {p, -1};
    }
    return out;
  }

  double critic_value(const CriticState& sc) const { return critic_.predict(sc.rates).front(); }

  /// critic(s_c(A(s))) for one link, others' powers fixed by the model.
  double composite_objective(const LocalRateModel& model, int link, std::span<const double> state) const {
    const double p = actor_.predict(state).front();
    return critic_value(model.evaluate(link, p, i_c_));
  }

  /// Accumulates d critic(s_c(A(s))) / d theta_actor into `tape` and returns
  /// dC/dp. The chain runs through the critic's input gradient and the rate
  /// model's Jacobian under the sort permutation frozen at A(s).
  double composite_gradient(const LocalRateModel& model, int link, std::span<const double> state,
                            GradientTape& actor_tape) const {
    ForwardCache a_cache;
    const double p = actor_.forward(state, a_cache).front();
    const CriticState sc = model.evaluate(link, p, i_c_);
    const double dcdp = critic_power_gradient(sc);
    const std::vector<double> up{dcdp};
    actor_.backward(a_cache, up, actor_tape);
    return dcdp;
  }

  /// dC/dp = sum_i dC/ds_c[i] * ds_c[i]/dp.
  double critic_power_gradient(const CriticState& sc) const {
    ForwardCache c_cache;
    critic_.forward(std::span<const double>(sc.rates), c_cache);
    GradientTape scratch = critic_.make_tape();
    const std::vector<double> one{1.0};
    critic_.backward(c_cache, one, scratch);
    double dcdp = 0.0;
    for (int i = 0; i < i_c_; ++i) dcdp += scratch.input_grad(i, 0) * sc.d_rates[i];
    return dcdp;
  }

  /// Critic step on 1/2 (C(s_c) - r)^2, then actor ascent on C(s_c(A(s)))
  /// with the updated critic. Transitions carry their link index.
  LearnStats learn(const SlotContext& ctx) override {
    LearnStats st;
    if (ctx.transitions.empty()) return st;
    if (!ctx.scenario || !ctx.channel || ctx.powers.empty())
      throw std::invalid_argument("ddpg learning needs the slot's scenario, channel and powers");
    const LocalRateModel model(*ctx.scenario, *ctx.channel, ctx.powers, radio_);
    const auto n = static_cast<Eigen::Index>(ctx.transitions.size());

    // Critic on the executed actions.
    Matrix sc_exec(i_c_, n);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& t = ctx.transitions[b];
      const CriticState sc = model.evaluate(t.link, t.power_mw, i_c_);
      sc_exec.col(b) = Mlp::as_column(sc.rates);
    }
    ForwardCache c_cache;
    const Matrix& q = critic_.forward(sc_exec, c_cache);
    Matrix c_up(1, n);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      const double resid = q(0, b) - ctx.transitions[b].reward;
      if (!std::isfinite(resid)) {
        c_up(0, b) = 0.0;
        ++st.skipped;
        continue;
      }
      c_up(0, b) = resid;
      loss += 0.5 * resid * resid;
    }
    GradientTape c_tape = critic_.make_tape();
    critic_.backward(c_cache, c_up, c_tape);
    if (c_tape.finite()) critic_.adam_step(c_tape, lr_critic_);

    // Actor through the rate model at a = A(s).
    ForwardCache a_cache;
    const Matrix& a = actor_.forward(stack_states(ctx.transitions), a_cache);
    Matrix sc_det(i_c_, n);
    std::vector<CriticState> det(static_cast<std::size_t>(n));
    for (Eigen::Index b = 0; b < n; ++b) {
      det[b] = model.evaluate(ctx.transitions[b].link, a(0, b), i_c_);
      sc_det.col(b) = Mlp::as_column(det[b].rates);
    }
    ForwardCache d_cache;
    const Matrix& qd = critic_.forward(sc_det, d_cache);
    GradientTape scratch = critic_.make_tape();
    critic_.backward(d_cache, Matrix::Ones(1, n), scratch);
    Matrix a_up(1, n);
    double objective = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      double dcdp = 0.0;
      for (int i = 0; i < i_c_; ++i) dcdp += scratch.input_grad(i, b) * det[b].d_rates[i];
      if (!std::isfinite(dcdp)) {
        a_up(0, b) = 0.0;
        ++st.skipped;
        continue;
      }
      a_up(0, b) = -dcdp;  // descend on -C
      objective += qd(0, b);
    }
    GradientTape a_tape = actor_.make_tape();
    actor_.backward(a_cache, a_up, a_tape);
    if (a_tape.finite()) actor_.adam_step(a_tape, lr_actor_);

    st.loss = loss;
    st.actor_objective = objective / static_cast<double>(n);
    st.applied = true;
    return st;
  }

  std::vector<double> value_estimates(const SlotContext& ctx) const override {
    std::vector<double> out;
    if (ctx.transitions.empty() || !ctx.scenario || !ctx.channel) return out;
    const LocalRateModel model(*ctx.scenario, *ctx.channel, ctx.powers, radio_);
    Matrix sc(i_c_, static_cast<Eigen::Index>(ctx.transitions.size()));
    for (std::size_t b = 0; b < ctx.transitions.size(); ++b) {
      const auto& t = ctx.transitions[b];
      sc.col(static_cast<Eigen::Index>(b)) = Mlp::as_column(model.evaluate(t.link, t.power_mw, i_c_).rates);
    }
    ForwardCache cache;
    const Matrix& q = critic_.forward(sc, cache);
    out.assign(q.data(), q.data() + q.size());
    return out;
  }

  int i_c() const { return i_c_; }
  const RadioParams& radio() const { return radio_; }
  const Mlp& actor() const { return actor_; }
  Mlp& actor() { return actor_; }
  const Mlp& critic() const { return critic_; }
  Mlp& critic() { return critic_; }

  nlohmann::json to_json() const override {
    return {{"agent", name()}, {"networks", {{"actor", actor_.to_json()}, {"critic", critic_.to_json()}}}};
  }

 private:
  Mlp actor_;
  Mlp critic_;
  int i_c_;
  RadioParams radio_;
  double lr_actor_;
  double lr_critic_;
};

}  // namespace drlpa

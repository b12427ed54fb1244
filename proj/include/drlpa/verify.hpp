#pragma once

// Self-checks shared by the `verify` command and the acceptance suite:
// finite-difference gradient checks, Jakes fading statistics, the greedy
// optimality oracle and reward proportionality.

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpa/channel.hpp"
#include "drlpa/critic_state.hpp"
#include "drlpa/ddpg.hpp"
#include "drlpa/metrics.hpp"
#include "drlpa/neural.hpp"
#include "drlpa/greedy_oracle.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

struct CheckResult {
  std::string name;
  bool passed = false;
  nlohmann::json measured;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const CheckResult& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"seconds", c.seconds}};
}

/// ||a - n|| / max(||a||, ||n||), or |a - n| when both norms vanish.
inline double relative_error(const Eigen::Ref<const Matrix>& analytic, const Eigen::Ref<const Matrix>& numeric) {
  const double diff = (analytic - numeric).norm();
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale > 1e-12 ? diff / scale : diff;
}

// ---------------------------------------------------------------------------
// Network gradients

struct GradientCheckOptions {
  int networks = 24;
  int batch = 3;
  double step = 1e-6;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
  // Applied to the analytic gradients before comparison; lets tests plant a
  // bug and confirm the check catches it.
  std::function<void(GradientTape&)> corrupt;
};

struct GradientCheckReport {
  double max_param_error = 0.0;
  double max_input_error = 0.0;
  int networks = 0;
  bool passed = false;
};

/// Random network of 1..3 layers mixing every activation kind.
inline Mlp random_network(Rng& rng) {
  std::uniform_int_distribution<int> depth(1, 3), width(2, 6);
  std::uniform_int_distribution<int> hidden_act(0, 1);
  std::uniform_int_distribution<int> head(0, 3);
  const int n_layers = depth(rng);
  std::vector<LayerSpec> specs;
  for (int i = 0; i + 1 < n_layers; ++i)
    specs.push_back({width(rng), hidden_act(rng) ? Activation::kRelu : Activation::kLinear});
  switch (head(rng)) {
    case 0: specs.push_back({width(rng), Activation::kLinear}); break;
    case 1: specs.push_back({width(rng), Activation::kSoftmax}); break;
    case 2: specs.push_back({1, Activation::kScaledSigmoid, 3.0}); break;
    default: specs.push_back({width(rng), Activation::kRelu}); break;
  }
  Mlp net(width(rng), specs, rng);
  // Non-zero biases so ReLU units sit away from the origin.
  std::normal_distribution<double> nb(0.0, 0.3);
  for (auto& l : net.mutable_layers())
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = nb(rng);
  return net;
}

/// Smallest |pre-activation| among ReLU layers; FD across a kink is invalid.
inline double min_relu_margin(const Mlp& net, const ForwardCache& cache) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.layers().size(); ++i)
    if (net.layers()[i].activation == Activation::kRelu) m = std::min(m, cache.pre[i].cwiseAbs().minCoeff());
  return m;
}

/// Loss L = sum(W .* f(X)) with fixed random weights W.
inline GradientCheckReport check_network_gradients(const GradientCheckOptions& opt = {}) {
  Rng rng(opt.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  GradientCheckReport rep;
  for (int trial = 0; trial < opt.networks; ++trial) {
    Mlp net = random_network(rng);
    Matrix x, w;
    ForwardCache cache;
    for (int attempt = 0;; ++attempt) {
      x = Matrix::NullaryExpr(net.input_dim(), opt.batch, [&] { return nd(rng); });
      net.forward(x, cache);
      if (min_relu_margin(net, cache) > 1e-3 || attempt > 50) break;
    }
    w = Matrix::NullaryExpr(net.output_dim(), opt.batch, [&] { return nd(rng); });
    auto loss = [&](const Mlp& n, const Matrix& in) {
      ForwardCache c;
      return n.forward(in, c).cwiseProduct(w).sum();
    };
    GradientTape tape = net.make_tape();
    net.forward(x, cache);
    net.backward(cache, w, tape);
    if (opt.corrupt) opt.corrupt(tape);

    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      Matrix nw(tape.dw[li].rows(), tape.dw[li].cols());
      for (Eigen::Index r = 0; r < nw.rows(); ++r)
        for (Eigen::Index c = 0; c < nw.cols(); ++c) {
          double& p = net.mutable_layers()[li].w(r, c);
          const double keep = p;
          p = keep + opt.step;
          const double up = loss(net, x);
          p = keep - opt.step;
          const double dn = loss(net, x);
          p = keep;
          nw(r, c) = (up - dn) / (2 * opt.step);
        }
      Vector nbias(tape.db[li].size());
      for (Eigen::Index r = 0; r < nbias.size(); ++r) {
        double& p = net.mutable_layers()[li].b(r);
        const double keep = p;
        p = keep + opt.step;
        const double up = loss(net, x);
        p = keep - opt.step;
        const double dn = loss(net, x);
        p = keep;
        nbias(r) = (up - dn) / (2 * opt.step);
      }
      rep.max_param_error = std::max(rep.max_param_error, relative_error(tape.dw[li], nw));
      rep.max_param_error = std::max(rep.max_param_error, relative_error(tape.db[li], nbias));
    }
    Matrix nx(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Matrix xp = x, xm = x;
        xp(r, c) += opt.step;
        xm(r, c) -= opt.step;
        nx(r, c) = (loss(net, xp) - loss(net, xm)) / (2 * opt.step);
      }
    rep.max_input_error = std::max(rep.max_input_error, relative_error(tape.input_grad, nx));
    ++rep.networks;
  }
  rep.passed = rep.max_param_error <= opt.tolerance && rep.max_input_error <= opt.tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Actor -> rate model -> sorted critic state -> critic

struct CompositeCheckReport {
  double max_error = 0.0;
  double max_power_error = 0.0;  // dC/dp against FD in p alone
  int links_checked = 0;
  int order_unstable_skipped = 0;
  bool passed = false;
};

inline CompositeCheckReport check_ddpg_composite_gradient(int links = 6, double tolerance = 1e-3,
                                                           std::uint64_t seed = 11) {
  Rng rng(seed);
  const RadioParams radio;
  const NetworkScenario s = build_scenario(25, 4, 0.01, 1.0, 8.0, derive_seed(seed, 1));
  const ChannelState c = init_channel(s, 10.0, 0.02, derive_seed(seed, 2));
  std::uniform_real_distribution<double> up(0.0, radio.p_max_mw);
  std::vector<double> powers(static_cast<std::size_t>(s.n_links()));
  for (double& p : powers) p = up(rng);
  const LocalRateModel model(s, c, powers, radio);

  const int i_c = 16;
  const int dim = 48;
  DdpgAgent agent(dim, i_c, radio, 1e-4, 1e-3, {8, 8}, {8}, rng);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, s.n_links() - 1);

  CompositeCheckReport rep;
  const double h = 1e-6;
  for (int tries = 0; rep.links_checked < links && tries < 20 * links; ++tries) {
    const int link = pick(rng);
    std::vector<double> state(dim);
    for (double& v : state) v = 0.5 * nd(rng);

    GradientTape tape = agent.actor().make_tape();
    const double dcdp = agent.composite_gradient(model, link, state, tape);
    const double p0 = agent.actor().predict(state).front();
    const auto base_links = model.evaluate(link, p0, i_c).links;

    // dC/dp alone, with a step in power large enough to register.
    const double hp = 1e-4 * radio.p_max_mw;
    const auto sp = model.evaluate(link, p0 + hp, i_c);
    const auto sm = model.evaluate(link, p0 - hp, i_c);
    if (sp.links != base_links || sm.links != base_links) {
      ++rep.order_unstable_skipped;
      continue;
    }
    const double num_dcdp = (agent.critic_value(sp) - agent.critic_value(sm)) / (2 * hp);
    const double pe = std::abs(num_dcdp - dcdp) / std::max({std::abs(num_dcdp), std::abs(dcdp), 1e-12});

    bool stable = true;
    double diff2 = 0.0, an2 = 0.0, nu2 = 0.0;
    for (std::size_t li = 0; li < agent.actor().layers().size() && stable; ++li) {
      auto probe = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double pu = agent.actor().predict(state).front();
        const double fu = agent.composite_objective(model, link, state);
        p = keep - h;
        const double pd = agent.actor().predict(state).front();
        const double fd = agent.composite_objective(model, link, state);
        p = keep;
        if (model.evaluate(link, pu, i_c).links != base_links || model.evaluate(link, pd, i_c).links != base_links)
          stable = false;
        const double num = (fu - fd) / (2 * h);
        diff2 += (num - analytic) * (num - analytic);
        an2 += analytic * analytic;
        nu2 += num * num;
      };
      auto& layer = agent.actor().mutable_layers()[li];
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
        for (Eigen::Index cc = 0; cc < layer.w.cols(); ++cc) probe(layer.w(r, cc), tape.dw[li](r, cc));
      for (Eigen::Index r = 0; r < layer.b.size(); ++r) probe(layer.b(r), tape.db[li](r));
    }
    if (!stable) {
      ++rep.order_unstable_skipped;
      continue;
    }
    const double scale = std::max(std::sqrt(an2), std::sqrt(nu2));
    const double err = scale > 1e-15 ? std::sqrt(diff2) / scale : std::sqrt(diff2);
    rep.max_error = std::max(rep.max_error, err);
    rep.max_power_error = std::max(rep.max_power_error, pe);
    ++rep.links_checked;
  }
  rep.passed = rep.links_checked == links && rep.max_error <= tolerance && rep.max_power_error <= tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Jakes fading

struct JakesReport {
  double rho_expected = 0.0;
  double rho_measured = 0.0;
  double mean_power = 0.0;
  int steps = 0;
  bool passed = false;
};

/// One Gauss-Markov chain driven by step_channel; lag-one correlation
/// estimated as Re sum h_t conj(h_{t+1}) / sum |h_t|^2.
inline JakesReport check_jakes(double f_d_hz = 10.0, double t_s = 0.02, int steps = 100000, std::uint64_t seed = 3,
                               double rho_tol = 0.01, double power_tol = 0.02) {
  Rng rng(seed);
  ChannelState c;
  c.stride = 1;
  c.beta = {1.0};
  c.h = {complex_normal(rng, 1.0)};
  c.g = {0.0};
  c.rho = jakes_correlation(f_d_hz, t_s);
  c.refresh_gains();
  double cross = 0.0, power = 0.0;
  std::complex<double> prev = c.h[0];
  for (int t = 0; t < steps; ++t) {
    step_channel(c, rng);
    cross += std::real(prev * std::conj(c.h[0]));
    power += std::norm(prev);
    prev = c.h[0];
  }
  JakesReport r;
  r.rho_expected = c.rho;
  r.rho_measured = cross / power;
  r.mean_power = power / steps;
  r.steps = steps;
  r.passed = std::abs(r.rho_measured - r.rho_expected) <= rho_tol && std::abs(r.mean_power - 1.0) <= power_tol;
  return r;
}

// ---------------------------------------------------------------------------
// Greedy optimality

struct GreedyOptimalityReport {
  int mdps = 0;
  int accepted = 0;
  bool counterexample_rejected = false;
  double counterexample_greedy = 0.0;
  double counterexample_optimal = 0.0;
  bool passed = false;
};

inline GreedyOptimalityReport check_greedy_optimality(int mdps = 100, std::uint64_t seed = 5) {
  Rng rng(seed);
  GreedyOptimalityReport r;
  for (int i = 0; i < mdps; ++i) {
    const auto res = verify_greedy_optimality(random_toy_mdp(rng));
    ++r.mdps;
    if (res.accepted) ++r.accepted;
  }
  const auto ce = verify_greedy_optimality(reward_trap_counterexample());
  r.counterexample_rejected = !ce.hypothesis_holds && !ce.accepted && !ce.greedy_optimal;
  r.counterexample_greedy = ce.greedy_value;
  r.counterexample_optimal = ce.optimal_value;
  r.passed = r.accepted == r.mdps && r.counterexample_rejected;
  return r;
}

// ---------------------------------------------------------------------------
// Reward proportionality

struct ProportionalityReport {
  double expected_factor = 0.0;  // by explicit multiplicity counting
  double measured_ratio = 0.0;
  double relative_error = 0.0;
  bool uniform_multiplicity = false;
  bool passed = false;
};

inline ProportionalityReport check_reward_proportionality(double alpha = 1.0, std::uint64_t seed = 9,
                                                          double tolerance = 1e-9) {
  const NetworkScenario s = build_scenario(25, 4, 0.01, 1.0, 8.0, seed);
  Rng rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> rates(static_cast<std::size_t>(s.n_links()));
  for (double& r : rates) r = u(rng);
  const auto mult = reward_multiplicities(s, alpha);
  ProportionalityReport rep;
  rep.expected_factor = mult.front();
  rep.uniform_multiplicity = std::all_of(mult.begin(), mult.end(), [&](double m) { return m == mult.front(); });
  const auto rw = local_rewards(s, rates, alpha);
  double sr = 0.0, sc = 0.0;
  for (double v : rw) sr += v;
  for (double v : rates) sc += v;
  rep.measured_ratio = sr / sc;
  rep.relative_error = std::abs(sr - rep.expected_factor * sc) / std::abs(rep.expected_factor * sc);
  rep.passed = rep.uniform_multiplicity && rep.relative_error <= tolerance;
  return rep;
}

// ---------------------------------------------------------------------------

template <typename F>
CheckResult timed_check(const std::string& name, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult c;
  c.name = name;
  fn(c);
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

/// Every self-check, in report order.
inline std::vector<CheckResult> run_all_checks(const GradientCheckOptions& grad = {}) {
  std::vector<CheckResult> out;
  out.push_back(timed_check("network_gradients", [&](CheckResult& c) {
    const auto r = check_network_gradients(grad);
    c.passed = r.passed;
    c.measured = {{"max_param_rel_error", r.max_param_error}, {"max_input_rel_error", r.max_input_error},
                  {"networks", r.networks}, {"tolerance", grad.tolerance}};
  }));
  out.push_back(timed_check("ddpg_composite_gradient", [&](CheckResult& c) {
    const auto r = check_ddpg_composite_gradient();
    c.passed = r.passed;
    c.measured = {{"max_rel_error", r.max_error}, {"max_power_rel_error", r.max_power_error},
                  {"links_checked", r.links_checked}, {"order_unstable_skipped", r.order_unstable_skipped}};
  }));
  out.push_back(timed_check("jakes_fading", [&](CheckResult& c) {
    const auto r = check_jakes();
    c.passed = r.passed;
    c.measured = {{"rho_expected", r.rho_expected}, {"rho_measured", r.rho_measured},
                  {"mean_power", r.mean_power}, {"steps", r.steps}};
  }));
  out.push_back(timed_check("greedy_optimality", [&](CheckResult& c) {
    const auto r = check_greedy_optimality();
    c.passed = r.passed;
    c.measured = {{"mdps", r.mdps}, {"accepted", r.accepted}, {"counterexample_rejected", r.counterexample_rejected},
                  {"counterexample_greedy", r.counterexample_greedy},
                  {"counterexample_optimal", r.counterexample_optimal}};
  }));
  out.push_back(timed_check("reward_proportionality", [&](CheckResult& c) {
    const auto r = check_reward_proportionality();
    c.passed = r.passed;
    c.measured = {{"expected_factor", r.expected_factor}, {"measured_ratio", r.measured_ratio},
                  {"relative_error", r.relative_error}};
  }));
  return out;
}

}  // namespace drlpa

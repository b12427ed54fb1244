#pragma once

// Episode orchestration: centralized training of one shared policy from the
// transitions of every link, distributed execution for evaluation, and
// parameter sweeps.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "drlpa/agents.hpp"
#include "drlpa/channel.hpp"
#include "drlpa/metrics.hpp"
#include "drlpa/replay_buffer.hpp"
#include "drlpa/topology.hpp"
#include "drlpa/tracking.hpp"

namespace drlpa {

struct EnvConfig {
  int n_cells = 25;
  int users_per_cell = 4;
  double r_min_km = 0.01;
  double r_max_km = 1.0;
  double shadow_db = 8.0;
  Placement placement = Placement::kUniformRadius;
  double doppler_hz = 10.0;
  double slot_s = 0.02;
  double alpha = 1.0;
  double p_max_dbm = 38.0;
  double p_min_dbm = 5.0;
  double noise_dbm = -114.0;
  double sinr_cap_db = 30.0;

  RadioParams radio() const {
    RadioParams r;
    r.p_max_mw = dbm_to_mw(p_max_dbm);
    r.p_min_mw = dbm_to_mw(p_min_dbm);
    r.noise_mw = dbm_to_mw(noise_dbm);
    r.sinr_cap = db_to_linear(sinr_cap_db);
    return r;
  }

  NetworkScenario scenario(std::uint64_t seed) const {
    return build_scenario(n_cells, users_per_cell, r_min_km, r_max_km, shadow_db, seed, placement);
  }
};

inline std::string to_string(Placement p) { return p == Placement::kUniformArea ? "area" : "radius"; }

inline Placement placement_from_string(const std::string& s) {
  if (s == "area") return Placement::kUniformArea;
  if (s == "radius") return Placement::kUniformRadius;
  throw std::invalid_argument("unknown placement '" + s + "' (expected area or radius)");
}

struct TrainConfig {
  EnvConfig env;
  AgentConfig agent;
  int episodes = 5000;
  int slots = 10;
  std::uint64_t seed = 1;
  bool replay = false;
  int replay_capacity = 10000;
  int replay_batch = 32;
  bool sequential = false;  // one update per transition instead of per slot
  int checkpoint_every = 0;
  bool tracking = false;
  TrackingConfig tracking_cfg;
  // Divide learner rewards by the mean reward multiplicity so value targets
  // are on the scale of a single link rate. Logged rewards stay raw. Unset
  // means on for ddpg only: its critic needs it, dql trains worse with it.
  std::optional<bool> normalize_reward;

  bool normalizes_reward() const { return normalize_reward.value_or(agent.kind == AgentKind::kDdpg); }

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("train.episodes must be >= 1");
    if (slots < 1) throw std::invalid_argument("train.slots must be >= 1");
    if (env.users_per_cell < 1) throw std::invalid_argument("scenario.users must be >= 1");
    lattice_side_for(env.n_cells);
    if (agent.i_c < 1) throw std::invalid_argument("agent.i_c must be >= 1");
    if (agent.levels < 3) throw std::invalid_argument("agent.levels must be >= 3");
    if (replay && agent.kind == AgentKind::kDdpg)
      throw std::invalid_argument("train.replay is not supported for ddpg (its critic state needs the live slot)");
    if (replay && (replay_batch < 1 || replay_capacity < replay_batch))
      throw std::invalid_argument("train.replay_batch must be in [1, train.replay_capacity]");
    if (tracking && agent.kind != AgentKind::kDql && agent.kind != AgentKind::kDdpg)
      throw std::invalid_argument("train.tracking needs an agent with a value function (dql or ddpg)");
  }
};

/// One slot of one episode. Vectors are indexed by link.
struct SlotLog {
  int episode = 0;
  int slot = 0;
  double sum_rate = 0.0;
  double sum_rate_per_ap = 0.0;
  double mean_reward = 0.0;
  double mean_power_dbm = 0.0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double actor_objective = std::numeric_limits<double>::quiet_NaN();
  int skipped = 0;
  bool trained = false;
  double decision_seconds = 0.0;  // mean wall time per link decision
  std::vector<double> powers;
  std::vector<double> rates;
  std::vector<double> rewards;
};

struct EpisodeLog {
  int episode = 0;
  std::vector<SlotLog> slots;
  double mean_sum_rate_per_ap = 0.0;
  bool aborted = false;
};

inline constexpr int kSlotCsvSchemaVersion = 1;

inline void write_slot_csv_header(std::ostream& os) {
  os << "schema_version,episode,slot,sum_rate,sum_rate_per_ap,mean_reward,mean_power_dbm,loss,actor_objective,"
        "skipped,trained\n";
}

inline void write_slot_csv_row(std::ostream& os, const SlotLog& s) {
  auto num = [&](double v) {
    if (std::isnan(v)) os << "";
    else os << v;
  };
  os << kSlotCsvSchemaVersion << ',' << s.episode << ',' << s.slot << ',';
  num(s.sum_rate);
  os << ',';
  num(s.sum_rate_per_ap);
  os << ',';
  num(s.mean_reward);
  os << ',';
  num(s.mean_power_dbm);
  os << ',';
  num(s.loss);
  os << ',';
  num(s.actor_objective);
  os << ',' << s.skipped << ',' << (s.trained ? 1 : 0) << '\n';
}

/// Rewards for a slot given its rates. The default is the localized reward;
/// online use can inject measured rewards instead.
using RewardSource =
    std::function<std::vector<double>(const NetworkScenario&, const ChannelState&, std::span<const double> rates)>;

struct TrainHooks {
  std::function<void(const SlotLog&)> on_slot;
  std::function<void(const EpisodeLog&)> on_episode;
  std::function<void(const PowerPolicy&, int episodes_done)> on_checkpoint;
  RewardSource reward;
};

struct TrainResult {
  std::unique_ptr<PowerPolicy> policy;
  std::vector<double> episode_sum_rate_per_ap;
  int aborted_episodes = 0;
  long long transitions = 0;
  long long skipped_updates = 0;
  long long tracked_skips = 0;
  double seconds = 0.0;
  double mean_decision_seconds = 0.0;

  /// Mean per-AP sum-rate over the last `count` episodes.
  double tail_mean(int count) const {
    if (episode_sum_rate_per_ap.empty()) return std::numeric_limits<double>::quiet_NaN();
    const int n = std::min<int>(count, static_cast<int>(episode_sum_rate_per_ap.size()));
    double acc = 0.0;
    for (int i = static_cast<int>(episode_sum_rate_per_ap.size()) - n; i < static_cast<int>(episode_sum_rate_per_ap.size()); ++i)
      acc += episode_sum_rate_per_ap[i];
    return acc / n;
  }
};

// Seed streams. Each episode owns independent scenario, channel and action
// streams so any episode can be replayed in isolation.
inline std::uint64_t scenario_seed(std::uint64_t base, long long episode) { return derive_seed(base, 3 * episode); }
inline std::uint64_t channel_seed(std::uint64_t base, long long episode) { return derive_seed(base, 3 * episode + 1); }
inline std::uint64_t action_seed(std::uint64_t base, long long episode) { return derive_seed(base, 3 * episode + 2); }
inline std::uint64_t init_seed(std::uint64_t base) { return derive_seed(base, ~0ULL - 1); }

/// Steps one scenario slot by slot: small-scale fading plus the previous
/// slot's powers and rates that the features read.
class EpisodeRunner {
 public:
  EpisodeRunner(const NetworkScenario& s, const EnvConfig& env, const AgentConfig& agent, std::uint64_t channel_seed)
      : s_(s), env_(env), agent_(agent), radio_(env.radio()), channel_rng_(channel_seed) {
    channel_ = init_channel(s_, env.doppler_hz, env.slot_s, channel_rng_);
    // Cold start: the slot before the first acted as if everyone sent P_max.
    prev_power_.assign(static_cast<std::size_t>(s_.n_links()), radio_.p_max_mw);
    prev_rate_ = evaluate_rates(s_, channel_, prev_power_, radio_).rate;
  }

  const ChannelState& channel() const { return channel_; }
  const RadioParams& radio() const { return radio_; }

  struct Step {
    Matrix states;
    std::vector<Decision> decisions;
    std::vector<double> powers;
    RateReport rates;
    double decision_seconds = 0.0;
  };

  /// Acts on the current slot and evaluates rates; does not advance.
  Step act(const PowerPolicy& policy, const ActContext& ctx) const {
    Step st;
    const auto t0 = std::chrono::steady_clock::now();
    if (policy.uses_observation())
      st.states = observation_matrix(s_, channel_, prev_power_, prev_rate_, agent_, radio_.p_max_mw);
    else
      st.states = Matrix(0, s_.n_links());
    st.decisions = policy.act_batch(st.states, ctx);
    const auto t1 = std::chrono::steady_clock::now();
    st.decision_seconds = std::chrono::duration<double>(t1 - t0).count() / s_.n_links();
    st.powers.resize(st.decisions.size());
    for (std::size_t i = 0; i < st.decisions.size(); ++i) st.powers[i] = st.decisions[i].power_mw;
    st.rates = evaluate_rates(s_, channel_, st.powers, radio_);
    return st;
  }

  /// Commits the slot's powers/rates as the next slot's history and evolves
  /// the small-scale fading.
  void advance(const Step& st) {
    prev_power_ = st.powers;
    prev_rate_ = st.rates.rate;
    step_channel(channel_, channel_rng_);
  }

 private:
  const NetworkScenario& s_;
  EnvConfig env_;
  AgentConfig agent_;
  RadioParams radio_;
  Rng channel_rng_;
  ChannelState channel_;
  std::vector<double> prev_power_;
  std::vector<double> prev_rate_;
};

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double a = 0.0;
  for (double x : v) a += x;
  return a / static_cast<double>(v.size());
}

/// Trains `policy` (or a fresh agent when null) for cfg.episodes episodes.
inline TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks = {},
                                std::unique_ptr<PowerPolicy> policy = nullptr) {
  cfg.validate();
  const RadioParams radio = cfg.env.radio();
  if (!policy) {
    Rng init(init_seed(cfg.seed));
    policy = make_policy(cfg.agent, radio, init);
  }
  TrainResult res;
  res.episode_sum_rate_per_ap.reserve(cfg.episodes);
  ReplayBuffer<Transition> replay(cfg.replay ? cfg.replay_capacity : 1);
  Rng replay_rng(derive_seed(cfg.seed, ~0ULL - 2));
  TrackingController tracker(cfg.tracking_cfg);
  const auto t_start = std::chrono::steady_clock::now();
  double decision_acc = 0.0;
  long long decision_n = 0;

  for (int k = 1; k <= cfg.episodes; ++k) {
    const NetworkScenario s = cfg.env.scenario(scenario_seed(cfg.seed, k));
    const double reward_scale = cfg.normalizes_reward() ? 1.0 / mean_of(reward_multiplicities(s, cfg.env.alpha)) : 1.0;
    EpisodeRunner runner(s, cfg.env, cfg.agent, channel_seed(cfg.seed, k));
    Rng act_rng(action_seed(cfg.seed, k));
    EpisodeLog ep;
    ep.episode = k;
    double ep_acc = 0.0;

    for (int t = 1; t <= cfg.slots; ++t) {
      ActContext actx{k, true, &act_rng};
      auto step = runner.act(*policy, actx);
      std::vector<double> rewards = hooks.reward ? hooks.reward(s, runner.channel(), step.rates.rate)
                                                 : local_rewards(s, step.rates.rate, cfg.env.alpha);

      SlotLog log;
      log.episode = k;
      log.slot = t;
      log.sum_rate = step.rates.sum_rate;
      log.sum_rate_per_ap = sum_rate_per_ap(step.rates);
      log.mean_reward = mean_of(rewards);
      double p_acc = 0.0;
      for (double p : step.powers) p_acc += p;
      log.mean_power_dbm = mw_to_dbm(p_acc / static_cast<double>(step.powers.size()));
      log.decision_seconds = step.decision_seconds;
      decision_acc += step.decision_seconds;
      ++decision_n;

      const bool finite = std::isfinite(log.sum_rate) &&
                          std::all_of(rewards.begin(), rewards.end(), [](double r) { return std::isfinite(r); });
      if (!finite) {
        ep.aborted = true;
        log.powers = std::move(step.powers);
        log.rates = std::move(step.rates.rate);
        log.rewards = std::move(rewards);
        if (hooks.on_slot) hooks.on_slot(log);
        ep.slots.push_back(std::move(log));
        break;
      }

      std::vector<Transition> ts(static_cast<std::size_t>(s.n_links()));
      for (int l = 0; l < s.n_links(); ++l) {
        auto& tr = ts[l];
        tr.link = l;
        if (step.states.rows() > 0) tr.state.assign(step.states.col(l).data(), step.states.col(l).data() + step.states.rows());
        tr.action = step.decisions[l].action;
        tr.power_mw = step.powers[l];
        tr.reward = reward_scale * rewards[l];
      }
      res.transitions += static_cast<long long>(ts.size());

      SlotContext sctx{&s, &runner.channel(), step.powers, ts, k};
      bool train = cfg.agent.learns();
      if (train && cfg.tracking) {
        const auto q = policy->value_estimates(sctx);
        std::vector<double> r(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) r[i] = ts[i].reward;
        train = tracker.step(q, r) == TrackingDecision::kTrain;
        if (!train) ++res.tracked_skips;
      }
      if (train) {
        LearnStats st;
        if (cfg.replay) {
          for (const auto& tr : ts) replay.push(tr);
          if (replay.size() >= static_cast<std::size_t>(cfg.replay_batch)) {
            const auto batch = replay.sample(cfg.replay_batch, replay_rng);
            SlotContext rctx;
            rctx.transitions = batch;
            rctx.episode = k;
            st = policy->learn(rctx);
          }
        } else if (cfg.sequential) {
          double loss = 0.0, obj = 0.0;
          for (std::size_t i = 0; i < ts.size(); ++i) {
            SlotContext one = sctx;
            one.transitions = std::span<const Transition>(&ts[i], 1);
            const auto si = policy->learn(one);
            loss += std::isnan(si.loss) ? 0.0 : si.loss;
            obj += std::isnan(si.actor_objective) ? 0.0 : si.actor_objective;
            st.skipped += si.skipped;
            st.applied = st.applied || si.applied;
          }
          st.loss = loss;
          st.actor_objective = obj / static_cast<double>(ts.size());
        } else {
          st = policy->learn(sctx);
        }
        log.loss = st.loss;
        log.actor_objective = st.actor_objective;
        log.skipped = st.skipped;
        log.trained = st.applied;
        res.skipped_updates += st.skipped;
      }

      ep_acc += log.sum_rate_per_ap;
      log.powers = step.powers;
      log.rates = step.rates.rate;
      log.rewards = std::move(rewards);
      if (hooks.on_slot) hooks.on_slot(log);
      runner.advance(step);
      ep.slots.push_back(std::move(log));
    }

    if (ep.aborted) ++res.aborted_episodes;
    ep.mean_sum_rate_per_ap = ep.slots.empty() ? 0.0 : ep_acc / static_cast<double>(ep.slots.size());
    res.episode_sum_rate_per_ap.push_back(ep.mean_sum_rate_per_ap);
    if (hooks.on_episode) hooks.on_episode(ep);
    if (cfg.checkpoint_every > 0 && hooks.on_checkpoint && k % cfg.checkpoint_every == 0) hooks.on_checkpoint(*policy, k);
  }

  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  res.mean_decision_seconds = decision_n ? decision_acc / decision_n : 0.0;
  res.policy = std::move(policy);
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation

enum class Sweep { kNone, kCellRange, kUserDensity, kDoppler };

inline std::string to_string(Sweep s) {
  switch (s) {
    case Sweep::kNone: return "none";
    case Sweep::kCellRange: return "cell_range";
    case Sweep::kUserDensity: return "user_density";
    case Sweep::kDoppler: return "doppler";
  }
  return "?";
}

inline Sweep sweep_from_string(const std::string& s) {
  if (s == "none") return Sweep::kNone;
  if (s == "cell_range") return Sweep::kCellRange;
  if (s == "user_density") return Sweep::kUserDensity;
  if (s == "doppler") return Sweep::kDoppler;
  throw std::invalid_argument("unknown sweep '" + s + "' (expected none, cell_range, user_density or doppler)");
}

/// Default sweep lattices: R_max in km, K, and f_d in Hz.
inline std::vector<double> sweep_values(Sweep s) {
  switch (s) {
    case Sweep::kNone: return {0.0};
    case Sweep::kCellRange: return {0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5};
    case Sweep::kUserDensity: return {1, 2, 3, 4, 5, 6, 7, 8};
    case Sweep::kDoppler: return {4, 6, 8, 10, 12, 14, 16, 18};
  }
  return {};
}

/// Applies one sweep point, rejecting values the simulator cannot represent.
inline EnvConfig apply_sweep(EnvConfig env, Sweep s, double v) {
  switch (s) {
    case Sweep::kNone: break;
    case Sweep::kCellRange:
      if (!(v > env.r_min_km)) throw std::invalid_argument("cell range must exceed r_min_km");
      env.r_max_km = v;
      break;
    case Sweep::kUserDensity: {
      const int k = static_cast<int>(v);
      if (k != v || k < 1) throw std::invalid_argument("user density must be a positive integer");
      env.users_per_cell = k;
      break;
    }
    case Sweep::kDoppler:
      if (v < 0.0) throw std::invalid_argument("doppler must be non-negative");
      env.doppler_hz = v;
      break;
  }
  return env;
}

struct EvalConfig {
  int scenarios = 500;
  int slots = 10;
  std::uint64_t seed = 20240601;
  int threads = 1;
};

struct EvalStat {
  double mean = 0.0;
  double variance = 0.0;  // across scenarios, population
  int n = 0;
};

/// Mean per-AP sum-rate of one scenario under distributed execution (no
/// exploration, no learning).
inline double evaluate_scenario(const PowerPolicy& policy, const AgentConfig& agent, const EnvConfig& env, int slots,
                                std::uint64_t seed) {
  const NetworkScenario s = env.scenario(derive_seed(seed, 0));
  EpisodeRunner runner(s, env, agent, derive_seed(seed, 1));
  Rng act_rng(derive_seed(seed, 2));
  double acc = 0.0;
  for (int t = 1; t <= slots; ++t) {
    ActContext ctx{1, false, &act_rng};
    auto step = runner.act(policy, ctx);
    acc += sum_rate_per_ap(step.rates);
    runner.advance(step);
  }
  return acc / slots;
}

inline EvalStat evaluate_point(const PowerPolicy& policy, const AgentConfig& agent, const EnvConfig& env,
                               const EvalConfig& ev, std::uint64_t point_seed) {
  if (ev.scenarios < 1 || ev.slots < 1) throw std::invalid_argument("evaluation needs >= 1 scenario and slot");
  std::vector<double> per(static_cast<std::size_t>(ev.scenarios));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < ev.scenarios; i = next++) per[i] = evaluate_scenario(policy, agent, env, ev.slots, derive_seed(point_seed, i));
  };
  const int n_threads = std::max(1, std::min(ev.threads, ev.scenarios));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  EvalStat st;
  st.n = ev.scenarios;
  st.mean = mean_of(per);
  for (double v : per) st.variance += (v - st.mean) * (v - st.mean);
  st.variance /= st.n;
  return st;
}

struct EvalRow {
  std::string sweep;
  double value = 0.0;
  std::string method;
  EvalStat stat;
};

struct EvalMethod {
  std::string name;
  const PowerPolicy* policy = nullptr;
};

/// Every method sees the same scenarios and fading at each sweep point.
inline std::vector<EvalRow> run_evaluation(const std::vector<EvalMethod>& methods, const AgentConfig& agent,
                                           const EnvConfig& env, const EvalConfig& ev, Sweep sweep,
                                           std::vector<double> values = {}) {
  if (values.empty()) values = sweep_values(sweep);
  std::vector<EvalRow> rows;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const EnvConfig point = apply_sweep(env, sweep, values[j]);
    const std::uint64_t point_seed = derive_seed(ev.seed, j);
    for (const auto& m : methods) rows.push_back({to_string(sweep), values[j], m.name, evaluate_point(*m.policy, agent, point, ev, point_seed)});
  }
  return rows;
}

inline constexpr int kEvalCsvSchemaVersion = 1;

inline void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows) {
  os << "schema_version,sweep,value,method,mean_sum_rate_per_ap,variance,scenarios\n";
  for (const auto& r : rows)
    os << kEvalCsvSchemaVersion << ',' << r.sweep << ',' << r.value << ',' << r.method << ',' << r.stat.mean << ','
       << r.stat.variance << ',' << r.stat.n << '\n';
}

// ---------------------------------------------------------------------------
// Latency

struct BenchResult {
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  int repetitions = 0;
  int n_cells = 0;
};

/// Wall time of one distributed decision: feature extraction for one link
/// plus one forward pass, repeated over links of a fixed scenario.
inline BenchResult bench_decision(const PowerPolicy& policy, const AgentConfig& agent, EnvConfig env, int repetitions,
                                  std::uint64_t seed) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  const NetworkScenario s = env.scenario(derive_seed(seed, 0));
  const RadioParams radio = env.radio();
  Rng rng(derive_seed(seed, 1));
  const ChannelState c = init_channel(s, env.doppler_hz, env.slot_s, rng);
  const std::vector<double> prev_p(static_cast<std::size_t>(s.n_links()), radio.p_max_mw);
  const std::vector<double> prev_r = evaluate_rates(s, c, prev_p, radio).rate;
  std::vector<double> times(static_cast<std::size_t>(repetitions));
  std::uniform_int_distribution<int> pick(0, s.n_links() - 1);
  volatile double sink = 0.0;
  for (int i = 0; i < repetitions; ++i) {
    const int l = pick(rng);
    const int n = l / s.users_per_cell();
    const int k = l % s.users_per_cell();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> x;
    if (policy.uses_observation())
      x = extract_features(s, c, prev_p, prev_r, n, k, agent.i_c, agent.feature, radio.p_max_mw).to_vector(agent.db_scale);
    const Decision d = policy.act(x, ActContext{1, false, &rng});
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + d.power_mw;
    times[i] = std::chrono::duration<double>(t1 - t0).count();
  }
  BenchResult b;
  b.repetitions = repetitions;
  b.n_cells = env.n_cells;
  b.mean_seconds = mean_of(times);
  std::nth_element(times.begin(), times.begin() + repetitions / 2, times.end());
  b.median_seconds = times[repetitions / 2];
  return b;
}

}  // namespace drlpa

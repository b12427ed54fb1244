#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "drlpa/trainer.hpp"

using namespace drlpa;

namespace {

TrainConfig small_config(AgentKind kind, int episodes = 3, int slots = 4) {
  TrainConfig cfg;
  cfg.agent.kind = kind;
  cfg.episodes = episodes;
  cfg.slots = slots;
  cfg.seed = 5;
  cfg.agent.epsilon.n_episodes = episodes;
  return cfg;
}

std::vector<SlotLog> collect(const TrainConfig& cfg) {
  std::vector<SlotLog> logs;
  TrainHooks hooks;
  hooks.on_slot = [&](const SlotLog& l) { logs.push_back(l); };
  run_training(cfg, hooks);
  return logs;
}

}  // namespace

TEST(Trainer, OneSlotCollectsEveryLink) {
  for (auto kind : {AgentKind::kReinforce, AgentKind::kDql, AgentKind::kDdpg, AgentKind::kMaxPower}) {
    const auto res = run_training(small_config(kind, 1, 1));
    EXPECT_EQ(res.transitions, 25 * 4) << to_string(kind);
    EXPECT_EQ(res.episode_sum_rate_per_ap.size(), 1u);
  }
}

TEST(Trainer, SameSeedIsBitIdentical) {
  for (auto kind : {AgentKind::kReinforce, AgentKind::kDql, AgentKind::kDdpg, AgentKind::kRandomPower}) {
    const auto a = collect(small_config(kind));
    const auto b = collect(small_config(kind));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].powers, b[i].powers) << to_string(kind) << " slot " << i;
      EXPECT_EQ(a[i].rates, b[i].rates);
      EXPECT_EQ(a[i].rewards, b[i].rewards);
      EXPECT_TRUE(a[i].loss == b[i].loss || (std::isnan(a[i].loss) && std::isnan(b[i].loss)));
    }
  }
}

TEST(Trainer, DifferentSeedsDiffer) {
  auto cfg = small_config(AgentKind::kDdpg);
  const auto a = collect(cfg);
  cfg.seed = 6;
  const auto b = collect(cfg);
  EXPECT_NE(a.front().rates, b.front().rates);
}

TEST(Trainer, PowersStayInBounds) {
  for (auto kind : {AgentKind::kReinforce, AgentKind::kDql, AgentKind::kDdpg, AgentKind::kRandomPower}) {
    const double pmax = EnvConfig{}.radio().p_max_mw;
    for (const auto& l : collect(small_config(kind))) EXPECT_TRUE(within_power_bounds(l.powers, pmax));
  }
}

TEST(Trainer, LoggedRewardsAreLocalizedRewards) {
  auto cfg = small_config(AgentKind::kDdpg, 1, 2);
  const auto logs = collect(cfg);
  const auto s = cfg.env.scenario(scenario_seed(cfg.seed, 1));
  for (const auto& l : logs) {
    const auto want = local_rewards(s, l.rates, 1.0);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(l.rewards[i], want[i]);
  }
}

TEST(Trainer, NonFiniteRewardAbortsEpisodeOnly) {
  auto cfg = small_config(AgentKind::kDql, 3, 3);
  TrainHooks hooks;
  int calls = 0;
  hooks.reward = [&calls](const NetworkScenario& s, const ChannelState&, std::span<const double> rates) {
    auto r = local_rewards(s, rates, 1.0);
    if (++calls == 2) r[0] = std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  int episodes = 0;
  hooks.on_episode = [&](const EpisodeLog& e) {
    ++episodes;
    if (e.episode == 1) {
      EXPECT_TRUE(e.aborted);
      EXPECT_EQ(e.slots.size(), 2u);
    } else {
      EXPECT_FALSE(e.aborted);
    }
  };
  const auto res = run_training(cfg, hooks);
  EXPECT_EQ(res.aborted_episodes, 1);
  EXPECT_EQ(episodes, 3);
}

TEST(Trainer, ReplayAndSequentialModesRun) {
  auto cfg = small_config(AgentKind::kDql, 2, 3);
  cfg.replay = true;
  cfg.replay_batch = 50;
  cfg.replay_capacity = 500;
  EXPECT_EQ(run_training(cfg).transitions, 2 * 3 * 100);
  auto seq = small_config(AgentKind::kReinforce, 1, 2);
  seq.sequential = true;
  EXPECT_EQ(run_training(seq).transitions, 200);
}

TEST(Trainer, TrackingSkipsWhenCriticIsAccurate) {
  auto cfg = small_config(AgentKind::kDdpg, 2, 5);
  cfg.tracking = true;
  cfg.tracking_cfg.l_max = 1e9;  // any critic is accurate enough
  const auto res = run_training(cfg);
  EXPECT_EQ(res.tracked_skips, 10);
  cfg.tracking_cfg.l_max = 0.0;
  EXPECT_EQ(run_training(cfg).tracked_skips, 0);
}

TEST(Trainer, ValidationRejectsBadCombinations) {
  auto cfg = small_config(AgentKind::kDdpg);
  cfg.replay = true;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(AgentKind::kReinforce);
  cfg.tracking = true;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(AgentKind::kDql);
  cfg.episodes = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(AgentKind::kDql);
  cfg.env.n_cells = 20;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Trainer, CheckpointHookFires) {
  auto cfg = small_config(AgentKind::kDdpg, 4, 1);
  cfg.checkpoint_every = 2;
  std::vector<int> at;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const PowerPolicy&, int k) { at.push_back(k); };
  run_training(cfg, hooks);
  EXPECT_EQ(at, (std::vector<int>{2, 4}));
}

TEST(Trainer, SlotCsvHasFixedColumns) {
  std::ostringstream os;
  write_slot_csv_header(os);
  SlotLog l;
  l.episode = 3;
  l.slot = 2;
  write_slot_csv_row(os, l);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header,
            "schema_version,episode,slot,sum_rate,sum_rate_per_ap,mean_reward,mean_power_dbm,loss,actor_objective,"
            "skipped,trained");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_EQ(row.substr(0, 6), "1,3,2,");
}

TEST(Sweeps, ValueSets) {
  EXPECT_EQ(sweep_values(Sweep::kCellRange), (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5}));
  EXPECT_EQ(sweep_values(Sweep::kUserDensity).size(), 8u);
  const auto d = sweep_values(Sweep::kDoppler);
  EXPECT_EQ(d.size(), 8u);
  EXPECT_EQ(d.front(), 4.0);
  EXPECT_EQ(d.back(), 18.0);
  EXPECT_EQ(sweep_from_string("doppler"), Sweep::kDoppler);
  EXPECT_THROW(sweep_from_string("bogus"), std::invalid_argument);
  EXPECT_THROW(apply_sweep(EnvConfig{}, Sweep::kUserDensity, 2.5), std::invalid_argument);
  EXPECT_EQ(apply_sweep(EnvConfig{}, Sweep::kCellRange, 0.3).r_max_km, 0.3);
}

TEST(Eval, DopplerSweepRowsPerMethod) {
  MaxPowerPolicy mp;
  RandomPowerPolicy rp;
  EvalConfig ev;
  ev.scenarios = 2;
  ev.slots = 2;
  const auto rows = run_evaluation({{"max_power", &mp}, {"random", &rp}}, AgentConfig{}, EnvConfig{}, ev,
                                   Sweep::kDoppler);
  EXPECT_EQ(rows.size(), 16u);
  int mp_rows = 0;
  for (const auto& r : rows) mp_rows += r.method == "max_power";
  EXPECT_EQ(mp_rows, 8);
  std::ostringstream os;
  write_eval_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "schema_version,sweep,value,method,mean_sum_rate_per_ap,variance,scenarios");
}

TEST(Eval, ThreadCountDoesNotChangeResults) {
  RandomPowerPolicy rp;
  EvalConfig ev;
  ev.scenarios = 6;
  ev.slots = 3;
  const auto one = evaluate_point(rp, AgentConfig{}, EnvConfig{}, ev, 11);
  ev.threads = 3;
  const auto three = evaluate_point(rp, AgentConfig{}, EnvConfig{}, ev, 11);
  EXPECT_EQ(one.mean, three.mean);
  EXPECT_EQ(one.variance, three.variance);
}

TEST(Eval, MaxPowerRateFallsWithUserDensity) {
  // Every extra user at full power adds co-cell interference.
  MaxPowerPolicy mp;
  EvalConfig ev;
  ev.scenarios = 20;
  ev.slots = 2;
  const auto rows = run_evaluation({{"max_power", &mp}}, AgentConfig{}, EnvConfig{}, ev, Sweep::kUserDensity);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].stat.mean, rows[i - 1].stat.mean);
}

TEST(Bench, ReportsPositiveLatency) {
  MaxPowerPolicy mp;
  const auto b = bench_decision(mp, AgentConfig{}, EnvConfig{}, 200, 3);
  EXPECT_EQ(b.repetitions, 200);
  EXPECT_GT(b.mean_seconds, 0.0);
  EXPECT_LT(b.mean_seconds, 1e-3);
  AgentConfig ac;
  Rng rng(4);
  const auto ddpg = make_policy(ac, EnvConfig{}.radio(), rng);
  const auto bd = bench_decision(*ddpg, ac, EnvConfig{}, 200, 3);
  EXPECT_GT(bd.mean_seconds, 0.0);
  EXPECT_LT(bd.mean_seconds, 1e-3);
}

TEST(Trainer, NormalizedRewardRescalesLearnerTargetsOnly) {
  // With an identical seed the first slot acts identically; only what the
  // learner sees changes.
  auto a = small_config(AgentKind::kDql, 1, 1);
  a.normalize_reward = true;
  auto b = a;
  b.normalize_reward = false;
  const auto la = collect(a), lb = collect(b);
  EXPECT_EQ(la.front().rewards, lb.front().rewards);
  EXPECT_LT(la.front().loss, lb.front().loss);
}

TEST(Trainer, RewardNormalizationDefaultsByAgent) {
  EXPECT_TRUE(small_config(AgentKind::kDdpg).normalizes_reward());
  EXPECT_FALSE(small_config(AgentKind::kDql).normalizes_reward());
  EXPECT_FALSE(small_config(AgentKind::kReinforce).normalizes_reward());
  auto cfg = small_config(AgentKind::kDql);
  cfg.normalize_reward = true;
  EXPECT_TRUE(cfg.normalizes_reward());
}

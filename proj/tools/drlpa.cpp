// drlpa: train, evaluate, benchmark and self-check power-allocation agents.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drlpa/agents.hpp"
#include "drlpa/config.hpp"
#include "drlpa/trainer.hpp"
#include "drlpa/verify.hpp"

namespace fs = std::filesystem;
using namespace drlpa;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingConfig = 2;
constexpr int kExitBadConfig = 3;
constexpr const char* kOutEnv = "DRLPA_OUT_DIR";

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string agent, feature, sweep, out;
  int levels = 0, episodes = 0, slots = 0;
  std::string seed;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "Flat key = value config file");
  cmd->add_option("--set", a.sets, "Override a config key, e.g. --set agent.lr_actor=1e-4")->type_name("KEY=VALUE");
  cmd->add_option("--agent", a.agent, "reinforce | dql | ddpg | max_power | random");
  cmd->add_option("--feature", a.feature, "f1 | f2");
  cmd->add_option("--levels", a.levels, "Discrete power levels |A|");
  cmd->add_option("--episodes", a.episodes, "Training episodes");
  cmd->add_option("--slots", a.slots, "Slots per episode");
  cmd->add_option("--seed", a.seed, "Base seed");
  cmd->add_option("--sweep", a.sweep, "none | cell_range | user_density | doppler");
  cmd->add_option("--out", a.out, std::string("Output directory (default $") + kOutEnv + " or ./runs)");
}

/// Defaults, then the config file, then flags.
RunConfig resolve_config(const CommonArgs& a) {
  RunConfig rc;
  if (!a.config_path.empty()) apply_settings(rc, load_settings_file(a.config_path));
  Settings cli;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(s, "--set expects KEY=VALUE, got '" + s + "'");
    cli.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (!a.agent.empty()) cli.emplace_back("agent.kind", a.agent);
  if (!a.feature.empty()) cli.emplace_back("agent.feature", a.feature);
  if (a.levels) cli.emplace_back("agent.levels", std::to_string(a.levels));
  if (a.episodes) cli.emplace_back("train.episodes", std::to_string(a.episodes));
  if (a.slots) cli.emplace_back("train.slots", std::to_string(a.slots));
  if (!a.seed.empty()) cli.emplace_back("train.seed", a.seed);
  if (!a.sweep.empty()) cli.emplace_back("eval.sweep", a.sweep);
  apply_settings(rc, cli);
  finalize(rc);
  try {
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg);
  }
  return rc;
}

fs::path output_dir(const CommonArgs& a) {
  if (!a.out.empty()) return a.out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "runs";
}

std::string settings_text(const RunConfig& rc) {
  std::ostringstream os;
  for (const auto& [k, v] : dump_settings(rc)) os << k << " = " << v << '\n';
  return os.str();
}

/// 12 hex digits of FNV-1a over the command and resolved settings, so equal
/// configurations share a run id.
std::string run_id(const std::string& command, const RunConfig& rc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : command + "\n" + settings_text(rc)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf).substr(0, 12);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

nlohmann::json manifest(const std::string& command, const RunConfig& rc, const fs::path& dir,
                        const std::vector<std::string>& outputs, const nlohmann::json& timing) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : dump_settings(rc)) cfg[k] = v;
  return {{"format", "drlpa.manifest"},
          {"version", 1},
          {"run_id", run_id(command, rc)},
          {"command", command},
          {"seed", rc.train.seed},
          {"config", cfg},
          {"output_dir", dir.string()},
          {"outputs", outputs},
          {"timing", timing}};
}

LoadedAgent load_agent_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigFileMissing(path);
  return load_checkpoint(nlohmann::json::parse(f));
}

int cmd_train(const CommonArgs& a) {
  RunConfig rc = resolve_config(a);
  const fs::path dir = output_dir(a);
  fs::create_directories(dir);
  const std::string id = run_id("train", rc);
  const RadioParams radio = rc.train.env.radio();

  std::ofstream csv(dir / "train_slots.csv");
  write_slot_csv_header(csv);
  std::vector<std::string> outputs = {"train_slots.csv", "checkpoint.json", "summary.json"};
  TrainHooks hooks;
  hooks.on_slot = [&](const SlotLog& s) { write_slot_csv_row(csv, s); };
  const int report_every = std::max(1, rc.train.episodes / 20);
  hooks.on_episode = [&](const EpisodeLog& e) {
    if (e.episode % report_every == 0 || e.episode == rc.train.episodes)
      std::cerr << "episode " << e.episode << "/" << rc.train.episodes << "  sum-rate/AP " << e.mean_sum_rate_per_ap
                << '\n';
  };
  hooks.on_checkpoint = [&](const PowerPolicy& p, int k) {
    const std::string name = "checkpoint_ep" + std::to_string(k) + ".json";
    write_json(dir / name, checkpoint_json(p, rc.train.agent, radio, k));
    outputs.push_back(name);
  };

  const TrainResult res = run_training(rc.train, hooks);
  csv.close();
  write_json(dir / "checkpoint.json", checkpoint_json(*res.policy, rc.train.agent, radio, rc.train.episodes));
  const int tail = std::min(1000, rc.train.episodes);
  const nlohmann::json timing = {{"train_seconds", res.seconds}, {"mean_decision_seconds", res.mean_decision_seconds}};
  write_json(dir / "summary.json", {{"run_id", id},
                                    {"episodes", rc.train.episodes},
                                    {"transitions", res.transitions},
                                    {"aborted_episodes", res.aborted_episodes},
                                    {"skipped_updates", res.skipped_updates},
                                    {"tracked_skips", res.tracked_skips},
                                    {"tail_episodes", tail},
                                    {"tail_mean_sum_rate_per_ap", res.tail_mean(tail)},
                                    {"timing", timing}});
  write_json(dir / "manifest.json", manifest("train", rc, dir, outputs, timing));
  std::cout << "run " << id << ": final " << tail << "-episode mean sum-rate per AP " << res.tail_mean(tail) << " ("
            << res.seconds << " s)\n";
  return 0;
}

int cmd_eval(const CommonArgs& a, const std::string& checkpoint, int scenarios, int threads, bool baselines) {
  RunConfig rc = resolve_config(a);
  if (scenarios > 0) rc.eval.scenarios = scenarios;
  if (threads > 0) rc.eval.threads = threads;
  const fs::path dir = output_dir(a);
  fs::create_directories(dir);
  const RadioParams radio = rc.train.env.radio();

  LoadedAgent agent;
  if (!checkpoint.empty()) {
    agent = load_agent_file(checkpoint);
  } else if (!rc.train.agent.learns()) {
    agent.config = rc.train.agent;
    agent.radio = radio;
    Rng unused(0);
    agent.policy = make_policy(agent.config, radio, unused);
  } else {
    throw ConfigError("checkpoint", "eval of " + to_string(rc.train.agent.kind) + " needs --checkpoint");
  }
  MaxPowerPolicy max_power(radio.p_max_mw);
  RandomPowerPolicy random_power(radio.p_max_mw);
  std::vector<EvalMethod> methods = {{agent.policy->name(), agent.policy.get()}};
  if (baselines) {
    if (agent.policy->kind() != AgentKind::kMaxPower) methods.push_back({"max_power", &max_power});
    if (agent.policy->kind() != AgentKind::kRandomPower) methods.push_back({"random", &random_power});
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_evaluation(methods, agent.config, rc.train.env, rc.eval, rc.sweep);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string name = "eval_" + to_string(rc.sweep) + ".csv";
  {
    std::ofstream f(dir / name);
    write_eval_csv(f, rows);
  }
  write_eval_csv(std::cout, rows);
  write_json(dir / "manifest.json", manifest("eval", rc, dir, {name}, {{"eval_seconds", secs}}));
  return 0;
}

int cmd_bench(const CommonArgs& a, const std::string& checkpoint, int reps, std::vector<int> cells) {
  RunConfig rc = resolve_config(a);
  if (reps > 0) rc.bench_repetitions = reps;
  const fs::path dir = output_dir(a);
  fs::create_directories(dir);
  const RadioParams radio = rc.train.env.radio();
  LoadedAgent agent;
  if (!checkpoint.empty()) {
    agent = load_agent_file(checkpoint);
  } else {
    // Untrained weights time the same as trained ones.
    agent.config = rc.train.agent;
    Rng init(init_seed(rc.train.seed));
    agent.policy = make_policy(agent.config, radio, init);
  }
  nlohmann::json out = nlohmann::json::array();
  for (int n : cells) {
    EnvConfig env = rc.train.env;
    env.n_cells = n;
    const auto b = bench_decision(*agent.policy, agent.config, env, rc.bench_repetitions, rc.train.seed);
    out.push_back({{"agent", agent.policy->name()},
                   {"n_cells", n},
                   {"repetitions", b.repetitions},
                   {"mean_seconds", b.mean_seconds},
                   {"median_seconds", b.median_seconds}});
  }
  nlohmann::json report = {{"bench", out}};
  if (out.size() >= 2) {
    const double m0 = out.front()["mean_seconds"].get<double>();
    const double m1 = out.back()["mean_seconds"].get<double>();
    report["latency_ratio_last_over_first"] = m1 / m0;
  }
  write_json(dir / "bench.json", report);
  write_json(dir / "manifest.json", manifest("bench", rc, dir, {"bench.json"}, {}));
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_verify(const CommonArgs& a) {
  const auto checks = run_all_checks();
  nlohmann::json j = nlohmann::json::array();
  bool ok = true;
  for (const auto& c : checks) {
    j.push_back(to_json(c));
    ok = ok && c.passed;
  }
  const nlohmann::json report = {{"passed", ok}, {"checks", j}};
  std::cout << report.dump(2) << '\n';
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_json(fs::path(a.out) / "verify.json", report);
  }
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cell downlink power allocation with shared-policy reinforcement learning"};
  app.require_subcommand(1);
  CommonArgs common;

  auto* train = app.add_subcommand("train", "Train an agent; writes checkpoint, per-slot CSV and manifest");
  add_common(train, common);

  std::string checkpoint;
  int scenarios = 0, threads = 0, reps = 0;
  bool no_baselines = false;
  std::vector<int> cells = {25, 100};
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint (or a baseline) over a parameter sweep");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON from train");
  eval->add_option("--scenarios", scenarios, "Scenarios per sweep point");
  eval->add_option("--threads", threads, "Worker threads");
  eval->add_flag("--no-baselines", no_baselines, "Skip the max-power and random reference rows");

  auto* bench = app.add_subcommand("bench", "Per-decision latency of distributed execution");
  add_common(bench, common);
  bench->add_option("--checkpoint", checkpoint, "Checkpoint JSON from train");
  bench->add_option("--reps", reps, "Repetitions per network size");
  bench->add_option("--cells", cells, "Network sizes to time")->delimiter(',');

  auto* verify = app.add_subcommand("verify", "Run the numerical self-checks; JSON report, non-zero on failure");
  verify->add_option("--out", common.out, "Also write verify.json here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(common);
    if (*eval) return cmd_eval(common, checkpoint, scenarios, threads, !no_baselines);
    if (*bench) return cmd_bench(common, checkpoint, reps, cells);
    if (*verify) return cmd_verify(common);
  } catch (const ConfigFileMissing& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << " [key: " << e.key() << "]\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

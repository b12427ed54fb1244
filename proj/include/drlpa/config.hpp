#pragma once

// Flat run configuration: `key = value` lines with dotted keys, `#`
// comments, and optional `[section]` headers that prefix the keys below them.

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drlpa/trainer.hpp"

namespace drlpa {

struct RunConfig {
  TrainConfig train;
  EvalConfig eval;
  Sweep sweep = Sweep::kNone;
  int bench_repetitions = 10000;
};

/// Invalid or unknown setting; key() names the offender.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what) : std::invalid_argument(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ConfigFileMissing : public std::runtime_error {
 public:
  explicit ConfigFileMissing(const std::string& path)
      : std::runtime_error("config file not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using Settings = std::vector<std::pair<std::string, std::string>>;

inline Settings parse_settings(std::istream& in, const std::string& origin) {
  Settings out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line, origin + ":" + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    out.emplace_back(key, value);
  }
  return out;
}

inline Settings load_settings_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigFileMissing(path);
  return parse_settings(f, path);
}

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& v);

template <>
inline int parse_value<int>(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const long long x = std::stoll(v, &used);
    if (used == v.size() && x >= INT32_MIN && x <= INT32_MAX) return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "invalid integer for " + key + ": '" + v + "'");
}

template <>
inline std::uint64_t parse_value<std::uint64_t>(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v.front() != '-') {
      const unsigned long long x = std::stoull(v, &used);
      if (used == v.size()) return x;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "invalid unsigned integer for " + key + ": '" + v + "'");
}

template <>
inline double parse_value<double>(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "invalid number for " + key + ": '" + v + "'");
}

template <>
inline bool parse_value<bool>(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key, "invalid boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

/// Applies one dotted-key setting. Unknown keys and unparsable values throw
/// ConfigError naming the key.
inline void apply_setting(RunConfig& rc, const std::string& key, const std::string& v) {
  using detail::parse_value;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>> table = {
      {"train.episodes", [](RunConfig& r, auto& k, auto& s) { r.train.episodes = parse_value<int>(k, s); }},
      {"train.slots", [](RunConfig& r, auto& k, auto& s) { r.train.slots = parse_value<int>(k, s); }},
      {"train.seed", [](RunConfig& r, auto& k, auto& s) { r.train.seed = parse_value<std::uint64_t>(k, s); }},
      {"train.replay", [](RunConfig& r, auto& k, auto& s) { r.train.replay = parse_value<bool>(k, s); }},
      {"train.replay_capacity", [](RunConfig& r, auto& k, auto& s) { r.train.replay_capacity = parse_value<int>(k, s); }},
      {"train.replay_batch", [](RunConfig& r, auto& k, auto& s) { r.train.replay_batch = parse_value<int>(k, s); }},
      {"train.sequential", [](RunConfig& r, auto& k, auto& s) { r.train.sequential = parse_value<bool>(k, s); }},
      {"train.normalize_reward",
       [](RunConfig& r, auto& k, auto& s) {
         r.train.normalize_reward = s == "auto" ? std::nullopt : std::optional<bool>(parse_value<bool>(k, s));
       }},
      {"train.checkpoint_every", [](RunConfig& r, auto& k, auto& s) { r.train.checkpoint_every = parse_value<int>(k, s); }},
      {"train.tracking", [](RunConfig& r, auto& k, auto& s) { r.train.tracking = parse_value<bool>(k, s); }},
      {"tracking.window", [](RunConfig& r, auto& k, auto& s) { r.train.tracking_cfg.window = parse_value<int>(k, s); }},
      {"tracking.l_max", [](RunConfig& r, auto& k, auto& s) { r.train.tracking_cfg.l_max = parse_value<double>(k, s); }},
      {"agent.kind", [](RunConfig& r, auto&, auto& s) { r.train.agent.kind = agent_kind_from_string(s); }},
      {"agent.feature", [](RunConfig& r, auto&, auto& s) { r.train.agent.feature = feature_kind_from_string(s); }},
      {"agent.levels", [](RunConfig& r, auto& k, auto& s) { r.train.agent.levels = parse_value<int>(k, s); }},
      {"agent.i_c", [](RunConfig& r, auto& k, auto& s) { r.train.agent.i_c = parse_value<int>(k, s); }},
      {"agent.lr_reinforce", [](RunConfig& r, auto& k, auto& s) { r.train.agent.lr_reinforce = parse_value<double>(k, s); }},
      {"agent.lr_dql", [](RunConfig& r, auto& k, auto& s) { r.train.agent.lr_dql = parse_value<double>(k, s); }},
      {"agent.lr_actor", [](RunConfig& r, auto& k, auto& s) { r.train.agent.lr_actor = parse_value<double>(k, s); }},
      {"agent.lr_critic", [](RunConfig& r, auto& k, auto& s) { r.train.agent.lr_critic = parse_value<double>(k, s); }},
      {"agent.hidden", [](RunConfig& r, auto&, auto& s) { r.train.agent.hidden = parse_ints(s); }},
      {"agent.critic_hidden", [](RunConfig& r, auto&, auto& s) { r.train.agent.critic_hidden = parse_ints(s); }},
      {"agent.epsilon_first", [](RunConfig& r, auto& k, auto& s) { r.train.agent.epsilon.first = parse_value<double>(k, s); }},
      {"agent.epsilon_last", [](RunConfig& r, auto& k, auto& s) { r.train.agent.epsilon.last = parse_value<double>(k, s); }},
      {"agent.db_scale", [](RunConfig& r, auto& k, auto& s) { r.train.agent.db_scale = parse_value<double>(k, s); }},
      {"scenario.cells", [](RunConfig& r, auto& k, auto& s) { r.train.env.n_cells = parse_value<int>(k, s); }},
      {"scenario.users", [](RunConfig& r, auto& k, auto& s) { r.train.env.users_per_cell = parse_value<int>(k, s); }},
      {"scenario.r_min_km", [](RunConfig& r, auto& k, auto& s) { r.train.env.r_min_km = parse_value<double>(k, s); }},
      {"scenario.r_max_km", [](RunConfig& r, auto& k, auto& s) { r.train.env.r_max_km = parse_value<double>(k, s); }},
      {"scenario.shadow_db", [](RunConfig& r, auto& k, auto& s) { r.train.env.shadow_db = parse_value<double>(k, s); }},
      {"scenario.placement", [](RunConfig& r, auto&, auto& s) { r.train.env.placement = placement_from_string(s); }},
      {"channel.doppler_hz", [](RunConfig& r, auto& k, auto& s) { r.train.env.doppler_hz = parse_value<double>(k, s); }},
      {"channel.slot_s", [](RunConfig& r, auto& k, auto& s) { r.train.env.slot_s = parse_value<double>(k, s); }},
      {"reward.alpha", [](RunConfig& r, auto& k, auto& s) { r.train.env.alpha = parse_value<double>(k, s); }},
      {"radio.p_max_dbm", [](RunConfig& r, auto& k, auto& s) { r.train.env.p_max_dbm = parse_value<double>(k, s); }},
      {"radio.p_min_dbm", [](RunConfig& r, auto& k, auto& s) { r.train.env.p_min_dbm = parse_value<double>(k, s); }},
      {"radio.noise_dbm", [](RunConfig& r, auto& k, auto& s) { r.train.env.noise_dbm = parse_value<double>(k, s); }},
      {"radio.sinr_cap_db", [](RunConfig& r, auto& k, auto& s) { r.train.env.sinr_cap_db = parse_value<double>(k, s); }},
      {"eval.scenarios", [](RunConfig& r, auto& k, auto& s) { r.eval.scenarios = parse_value<int>(k, s); }},
      {"eval.slots", [](RunConfig& r, auto& k, auto& s) { r.eval.slots = parse_value<int>(k, s); }},
      {"eval.seed", [](RunConfig& r, auto& k, auto& s) { r.eval.seed = parse_value<std::uint64_t>(k, s); }},
      {"eval.threads", [](RunConfig& r, auto& k, auto& s) { r.eval.threads = parse_value<int>(k, s); }},
      {"eval.sweep", [](RunConfig& r, auto&, auto& s) { r.sweep = sweep_from_string(s); }},
      {"bench.repetitions", [](RunConfig& r, auto& k, auto& s) { r.bench_repetitions = parse_value<int>(k, s); }},
  };
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  try {
    it->second(rc, key, v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(key, "invalid value for " + key + ": " + ex.what());
  }
}

inline void apply_settings(RunConfig& rc, const Settings& s) {
  for (const auto& [k, v] : s) apply_setting(rc, k, v);
}

/// Every key with its current value, in the file format.
inline Settings dump_settings(const RunConfig& rc) {
  const auto& t = rc.train;
  const auto& a = t.agent;
  const auto& e = t.env;
  auto d = [](double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
  };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"train.episodes", std::to_string(t.episodes)},
      {"train.slots", std::to_string(t.slots)},
      {"train.seed", std::to_string(t.seed)},
      {"train.replay", b(t.replay)},
      {"train.replay_capacity", std::to_string(t.replay_capacity)},
      {"train.replay_batch", std::to_string(t.replay_batch)},
      {"train.sequential", b(t.sequential)},
      {"train.normalize_reward", t.normalize_reward ? b(*t.normalize_reward) : "auto"},
      {"train.checkpoint_every", std::to_string(t.checkpoint_every)},
      {"train.tracking", b(t.tracking)},
      {"tracking.window", std::to_string(t.tracking_cfg.window)},
      {"tracking.l_max", d(t.tracking_cfg.l_max)},
      {"agent.kind", to_string(a.kind)},
      {"agent.feature", to_string(a.feature)},
      {"agent.levels", std::to_string(a.levels)},
      {"agent.i_c", std::to_string(a.i_c)},
      {"agent.lr_reinforce", d(a.lr_reinforce)},
      {"agent.lr_dql", d(a.lr_dql)},
      {"agent.lr_actor", d(a.lr_actor)},
      {"agent.lr_critic", d(a.lr_critic)},
      {"agent.hidden", join_ints(a.hidden)},
      {"agent.critic_hidden", join_ints(a.critic_hidden)},
      {"agent.epsilon_first", d(a.epsilon.first)},
      {"agent.epsilon_last", d(a.epsilon.last)},
      {"agent.db_scale", d(a.db_scale)},
      {"scenario.cells", std::to_string(e.n_cells)},
      {"scenario.users", std::to_string(e.users_per_cell)},
      {"scenario.r_min_km", d(e.r_min_km)},
      {"scenario.r_max_km", d(e.r_max_km)},
      {"scenario.shadow_db", d(e.shadow_db)},
      {"scenario.placement", to_string(e.placement)},
      {"channel.doppler_hz", d(e.doppler_hz)},
      {"channel.slot_s", d(e.slot_s)},
      {"reward.alpha", d(e.alpha)},
      {"radio.p_max_dbm", d(e.p_max_dbm)},
      {"radio.p_min_dbm", d(e.p_min_dbm)},
      {"radio.noise_dbm", d(e.noise_dbm)},
      {"radio.sinr_cap_db", d(e.sinr_cap_db)},
      {"eval.scenarios", std::to_string(rc.eval.scenarios)},
      {"eval.slots", std::to_string(rc.eval.slots)},
      {"eval.seed", std::to_string(rc.eval.seed)},
      {"eval.threads", std::to_string(rc.eval.threads)},
      {"eval.sweep", to_string(rc.sweep)},
      {"bench.repetitions", std::to_string(rc.bench_repetitions)},
  };
}

/// The epsilon schedule spans the whole run.
inline void finalize(RunConfig& rc) { rc.train.agent.epsilon.n_episodes = rc.train.episodes; }

}  // namespace drlpa

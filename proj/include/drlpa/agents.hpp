#pragma once

// Agent configuration, construction, observation batching and checkpoints.

#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpa/action_codec.hpp"
#include "drlpa/baselines.hpp"
#include "drlpa/ddpg.hpp"
#include "drlpa/dql.hpp"
#include "drlpa/features.hpp"
#include "drlpa/policy.hpp"
#include "drlpa/reinforce.hpp"

namespace drlpa {

struct AgentConfig {
  AgentKind kind = AgentKind::kDdpg;
  FeatureKind feature = FeatureKind::kF2;
  int levels = 10;
  int i_c = 16;
  double lr_reinforce = 1e-4;
  double lr_dql = 1e-3;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  std::vector<int> hidden = {64, 128};
  std::vector<int> critic_hidden = {64};
  EpsilonSchedule epsilon;
  // Scale applied to gamma_db before it enters a network.
  double db_scale = 0.1;

  int input_dim() const { return feature_dim(feature, i_c); }
  bool learns() const {
    return kind == AgentKind::kReinforce || kind == AgentKind::kDql || kind == AgentKind::kDdpg;
  }
};

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (v <= 0) throw std::invalid_argument("layer width must be positive: " + item);
    out.push_back(v);
  }
  return out;
}

inline nlohmann::json to_json(const RadioParams& r) {
  return {{"p_max_mw", r.p_max_mw}, {"p_min_mw", r.p_min_mw}, {"noise_mw", r.noise_mw}, {"sinr_cap", r.sinr_cap}};
}

inline RadioParams radio_from_json(const nlohmann::json& j) {
  RadioParams r;
  r.p_max_mw = j.at("p_max_mw").get<double>();
  r.p_min_mw = j.at("p_min_mw").get<double>();
  r.noise_mw = j.at("noise_mw").get<double>();
  r.sinr_cap = j.at("sinr_cap").get<double>();
  return r;
}

inline nlohmann::json to_json(const AgentConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"feature", to_string(c.feature)},
          {"levels", c.levels},
          {"i_c", c.i_c},
          {"lr_reinforce", c.lr_reinforce},
          {"lr_dql", c.lr_dql},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"hidden", c.hidden},
          {"critic_hidden", c.critic_hidden},
          {"epsilon_first", c.epsilon.first},
          {"epsilon_last", c.epsilon.last},
          {"epsilon_episodes", c.epsilon.n_episodes},
          {"db_scale", c.db_scale}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
  AgentConfig c;
  c.kind = agent_kind_from_string(j.at("kind").get<std::string>());
  c.feature = feature_kind_from_string(j.at("feature").get<std::string>());
  c.levels = j.at("levels").get<int>();
  c.i_c = j.at("i_c").get<int>();
  c.lr_reinforce = j.at("lr_reinforce").get<double>();
  c.lr_dql = j.at("lr_dql").get<double>();
  c.lr_actor = j.at("lr_actor").get<double>();
  c.lr_critic = j.at("lr_critic").get<double>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  c.epsilon.first = j.at("epsilon_first").get<double>();
  c.epsilon.last = j.at("epsilon_last").get<double>();
  c.epsilon.n_episodes = j.at("epsilon_episodes").get<int>();
  c.db_scale = j.at("db_scale").get<double>();
  return c;
}

inline ActionCodec make_codec(const AgentConfig& c, const RadioParams& radio) {
  if (c.kind == AgentKind::kDdpg) return ActionCodec::continuous(radio.p_max_mw);
  return ActionCodec::discrete(c.levels, radio.p_min_mw, radio.p_max_mw);
}

/// Fresh agent with randomly initialized networks.
inline std::unique_ptr<PowerPolicy> make_policy(const AgentConfig& c, const RadioParams& radio, Rng& rng) {
  switch (c.kind) {
    case AgentKind::kReinforce:
      return std::make_unique<ReinforceAgent>(c.input_dim(), make_codec(c, radio), c.lr_reinforce, c.hidden, rng);
    case AgentKind::kDql:
      return std::make_unique<DqlAgent>(c.input_dim(), make_codec(c, radio), c.lr_dql, c.epsilon, c.hidden, rng);
    case AgentKind::kDdpg:
      return std::make_unique<DdpgAgent>(c.input_dim(), c.i_c, radio, c.lr_actor, c.lr_critic, c.hidden,
                                         c.critic_hidden, rng);
    case AgentKind::kMaxPower:
      return std::make_unique<MaxPowerPolicy>(radio.p_max_mw);
    case AgentKind::kRandomPower:
      return std::make_unique<RandomPowerPolicy>(radio.p_max_mw);
  }
  throw std::invalid_argument("unknown agent kind");
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_json(const PowerPolicy& p, const AgentConfig& c, const RadioParams& radio,
                                      int episodes_done) {
  return {{"format", "drlpa.checkpoint"},
          {"version", kCheckpointVersion},
          {"episodes_done", episodes_done},
          {"config", to_json(c)},
          {"radio", to_json(radio)},
          {"agent", p.to_json()}};
}

struct LoadedAgent {
  AgentConfig config;
  RadioParams radio;
  int episodes_done = 0;
  std::unique_ptr<PowerPolicy> policy;
};

inline LoadedAgent load_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != "drlpa.checkpoint") throw std::invalid_argument("not a drlpa checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("unsupported checkpoint version " + j.at("version").dump());
  LoadedAgent out;
  out.config = agent_config_from_json(j.at("config"));
  out.radio = radio_from_json(j.at("radio"));
  out.episodes_done = j.value("episodes_done", 0);
  const auto& c = out.config;
  const auto& nets = j.at("agent").contains("networks") ? j.at("agent").at("networks") : nlohmann::json::object();
  switch (c.kind) {
    case AgentKind::kReinforce:
      out.policy = std::make_unique<ReinforceAgent>(Mlp::from_json(nets.at("policy")), make_codec(c, out.radio),
                                                    c.lr_reinforce);
      break;
    case AgentKind::kDql:
      out.policy =
          std::make_unique<DqlAgent>(Mlp::from_json(nets.at("q")), make_codec(c, out.radio), c.lr_dql, c.epsilon);
      break;
    case AgentKind::kDdpg:
      out.policy = std::make_unique<DdpgAgent>(Mlp::from_json(nets.at("actor")), Mlp::from_json(nets.at("critic")),
                                               out.radio, c.lr_actor, c.lr_critic);
      break;
    default: {
      Rng unused(0);
      out.policy = make_policy(c, out.radio, unused);
    }
  }
  return out;
}

/// Network inputs of every link as columns, from current gains and the
/// previous slot's powers and rates.
inline Matrix observation_matrix(const NetworkScenario& s, const ChannelState& c, std::span<const double> prev_power,
                                 std::span<const double> prev_rate, const AgentConfig& cfg, double p_max_mw) {
  const int dim = cfg.input_dim();
  Matrix m(dim, s.n_links());
  for (int n = 0; n < s.n_cells(); ++n) {
    for (int k = 0; k < s.users_per_cell(); ++k) {
      const auto obs = extract_features(s, c, prev_power, prev_rate, n, k, cfg.i_c, cfg.feature, p_max_mw);
      const auto v = obs.to_vector(cfg.db_scale);
      m.col(link_index(n, k, s.users_per_cell())) = Mlp::as_column(v);
    }
  }
  return m;
}

}  // namespace drlpa

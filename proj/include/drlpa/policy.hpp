#pragma once

// Shared-policy interface. One parameter set serves every link: acting is
// per link from that link's own observation, learning consumes the
// transitions of all links.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpa/channel.hpp"
#include "drlpa/common.hpp"
#include "drlpa/neural.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

struct Decision {
  double power_mw = 0.0;
  int action = -1;  // discrete level, -1 for continuous actions
};

struct ActContext {
  int episode = 1;  // 1-based
  bool explore = false;
  Rng* rng = nullptr;
};

struct Transition {
  int link = -1;
  std::vector<double> state;
  int action = -1;
  double power_mw = 0.0;
  double reward = 0.0;
};

/// Everything one learning step may read. scenario/channel/powers describe
/// the slot the transitions came from; they are null/empty for replayed
/// minibatches.
struct SlotContext {
  const NetworkScenario* scenario = nullptr;
  const ChannelState* channel = nullptr;
  std::span<const double> powers;
  std::span<const Transition> transitions;
  int episode = 1;
};

struct LearnStats {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double actor_objective = std::numeric_limits<double>::quiet_NaN();
  int skipped = 0;
  bool applied = false;
};

enum class AgentKind { kReinforce, kDql, kDdpg, kMaxPower, kRandomPower };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kReinforce: return "reinforce";
    case AgentKind::kDql: return "dql";
    case AgentKind::kDdpg: return "ddpg";
    case AgentKind::kMaxPower: return "max_power";
    case AgentKind::kRandomPower: return "random";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "reinforce") return AgentKind::kReinforce;
  if (s == "dql") return AgentKind::kDql;
  if (s == "ddpg") return AgentKind::kDdpg;
  if (s == "max_power") return AgentKind::kMaxPower;
  if (s == "random" || s == "random_power") return AgentKind::kRandomPower;
  throw std::invalid_argument("unknown agent '" + s + "'");
}

class PowerPolicy {
 public:
  virtual ~PowerPolicy() = default;

  virtual AgentKind kind() const = 0;
  std::string name() const { return to_string(kind()); }

  /// Whether act() reads the observation; baselines do not.
  virtual bool uses_observation() const { return true; }

  virtual Decision act(std::span<const double> state, const ActContext& ctx) const = 0;

  /// Batched act over columns of `states`; must equal per-column act().
  virtual std::vector<Decision> act_batch(const Matrix& states, const ActContext& ctx) const {
    std::vector<Decision> out;
    out.reserve(static_cast<std::size_t>(states.cols()));
    std::vector<double> col(static_cast<std::size_t>(states.rows()));
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      for (Eigen::Index r = 0; r < states.rows(); ++r) col[r] = states(r, c);
      out.push_back(act(col, ctx));
    }
    return out;
  }

  virtual LearnStats learn(const SlotContext&) { return {}; }

  /// Value predictions for the given transitions (Q(s,a) or critic output),
  /// empty when the agent has no value function.
  virtual std::vector<double> value_estimates(const SlotContext&) const { return {}; }

  virtual nlohmann::json to_json() const { return {{"agent", name()}}; }
};

/// Stacks transition states as columns.
inline Matrix stack_states(std::span<const Transition> ts) {
  if (ts.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(ts.front().state.size()), static_cast<Eigen::Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = Mlp::as_column(ts[i].state);
  return m;
}

}  // namespace drlpa

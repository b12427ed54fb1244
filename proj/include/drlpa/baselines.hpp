#pragma once

// Non-learning benchmark allocators.

#include <random>
#include <span>
#include <vector>

#include "drlpa/common.hpp"
#include "drlpa/metrics.hpp"
#include "drlpa/policy.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

enum class BaselineKind { kMaxPower, kRandomPower };

/// max_power: every link at P_max. random_power: i.i.d. Uniform(0, P_max).
inline PowerAllocation allocate(BaselineKind kind, const NetworkScenario& s, Rng& rng, double p_max_mw) {
  PowerAllocation p(static_cast<std::size_t>(s.n_links()), p_max_mw);
  if (kind == BaselineKind::kRandomPower) {
    std::uniform_real_distribution<double> u(0.0, p_max_mw);
    for (double& v : p) v = u(rng);
  }
  return p;
}

inline PowerAllocation allocate(BaselineKind kind, const NetworkScenario& s, Rng& rng) {
  return allocate(kind, s, rng, RadioParams{}.p_max_mw);
}

class MaxPowerPolicy final : public PowerPolicy {
 public:
  explicit MaxPowerPolicy(double p_max_mw = RadioParams{}.p_max_mw) : p_max_(p_max_mw) {}
  AgentKind kind() const override { return AgentKind::kMaxPower; }
  bool uses_observation() const override { return false; }
  Decision act(std::span<const double>, const ActContext&) const override { return {p_max_, -1}; }
  std::vector<Decision> act_batch(const Matrix& states, const ActContext&) const override {
    return std::vector<Decision>(static_cast<std::size_t>(states.cols()), Decision{p_max_, -1});
  }

 private:
  double p_max_;
};

/// Draws from ctx.rng on every call, exploring or not; without a generator
/// it falls back to P_max / 2.
class RandomPowerPolicy final : public PowerPolicy {
 public:
  explicit RandomPowerPolicy(double p_max_mw = RadioParams{}.p_max_mw) : p_max_(p_max_mw) {}
  AgentKind kind() const override { return AgentKind::kRandomPower; }
  bool uses_observation() const override { return false; }
  Decision act(std::span<const double>, const ActContext& ctx) const override {
    if (!ctx.rng) return {0.5 * p_max_, -1};
    std::uniform_real_distribution<double> u(0.0, p_max_);
    return {u(*ctx.rng), -1};
  }

 private:
  double p_max_;
};

}  // namespace drlpa

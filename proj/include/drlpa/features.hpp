#pragma once

// Per-link observation: sorted own-gain-normalized interferer gains plus the
// previous-slot powers (and rates) of the retained interferers.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "drlpa/channel.hpp"
#include "drlpa/common.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

enum class FeatureKind { kF1, kF2 };

inline std::string to_string(FeatureKind k) { return k == FeatureKind::kF1 ? "f1" : "f2"; }

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "f1") return FeatureKind::kF1;
  if (s == "f2") return FeatureKind::kF2;
  throw std::invalid_argument("unknown feature kind '" + s + "' (expected f1 or f2)");
}

inline constexpr double kFeatureDbFloor = -200.0;
inline constexpr double kFeatureDbCeil = 200.0;

inline int feature_dim(FeatureKind kind, int i_c) { return (kind == FeatureKind::kF1 ? 2 : 3) * i_c; }

struct AgentObservation {
  std::vector<double> gamma_db;    // non-increasing
  std::vector<double> prev_power;  // p / P_max of the retained links
  std::vector<double> prev_rate;   // f2 only
  std::vector<int> index_set;      // retained link indices, -1 for padding
  int padded = 0;
  FeatureKind kind = FeatureKind::kF2;

  /// Network input: [gamma_db * db_scale, prev_power, prev_rate].
  std::vector<double> to_vector(double db_scale = 1.0) const {
    std::vector<double> v;
    v.reserve(gamma_db.size() * 3);
    for (double g : gamma_db) v.push_back(g * db_scale);
    v.insert(v.end(), prev_power.begin(), prev_power.end());
    if (kind == FeatureKind::kF2) v.insert(v.end(), prev_rate.begin(), prev_rate.end());
    return v;
  }
};

/// Sorts values decreasingly and keeps the first `count`; ties resolve to the
/// smaller key. Returns the positions of the kept entries.
inline std::vector<int> top_indices(std::span<const double> values, std::span<const int> keys, int count) {
  std::vector<int> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const auto cmp = [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return keys[a] < keys[b];
  };
  const int keep = std::min<int>(count, static_cast<int>(order.size()));
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), cmp);
  order.resize(keep);
  return order;
}

/// Observation of link (cell, user). Candidates are every downlink (n', j)
/// with n' in {cell} and its neighborhood, except the own link; each is
/// valued by the gain from BS n' to this receiver over the own gain.
inline AgentObservation extract_features(const NetworkScenario& s, const ChannelState& c,
                                         std::span<const double> prev_power, std::span<const double> prev_rate,
                                         int cell, int user, int i_c, FeatureKind kind, double p_max_mw) {
  const int k_users = s.users_per_cell();
  if (cell < 0 || cell >= s.n_cells() || user < 0 || user >= k_users)
    throw std::out_of_range("link index out of range");
  if (i_c <= 0) throw std::invalid_argument("i_c must be positive");
  const int own = link_index(cell, user, k_users);
  const auto cells = s.local_cells(cell);
  const double own_gain = c.gain(own, 0);

  const int n_cand = s.stride() * k_users - 1;
  std::vector<double> ratio;
  std::vector<int> links;
  ratio.reserve(n_cand);
  links.reserve(n_cand);
  for (int m = 0; m < s.stride(); ++m) {
    const double r = c.gain(own, m) / own_gain;
    for (int j = 0; j < k_users; ++j) {
      const int l = link_index(cells[m], j, k_users);
      if (l == own) continue;
      ratio.push_back(r);
      links.push_back(l);
    }
  }
  const auto keep = top_indices(ratio, links, i_c);

  AgentObservation obs;
  obs.kind = kind;
  obs.gamma_db.reserve(i_c);
  for (int idx : keep) {
    const int l = links[idx];
    const double db = ratio[idx] > 0.0 ? linear_to_db(ratio[idx]) : kFeatureDbFloor;
    obs.gamma_db.push_back(std::clamp(db, kFeatureDbFloor, kFeatureDbCeil));
    obs.prev_power.push_back(prev_power[l] / p_max_mw);
    if (kind == FeatureKind::kF2) obs.prev_rate.push_back(prev_rate[l]);
    obs.index_set.push_back(l);
  }
  // Too few candidates: pad at the tail so gamma_db stays non-increasing.
  while (static_cast<int>(obs.gamma_db.size()) < i_c) {
    obs.gamma_db.push_back(kFeatureDbFloor);
    obs.prev_power.push_back(0.0);
    if (kind == FeatureKind::kF2) obs.prev_rate.push_back(0.0);
    obs.index_set.push_back(-1);
    ++obs.padded;
  }
  return obs;
}

}  // namespace drlpa

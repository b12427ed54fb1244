#pragma once

// SINR, rates, sum-rate and the localized reward.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "drlpa/channel.hpp"
#include "drlpa/common.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

/// Transmit power per link in mW, indexed like the links of the scenario.
using PowerAllocation = std::vector<double>;

struct RateReport {
  std::vector<double> sinr;  // capped, linear
  std::vector<double> rate;  // bits/s/Hz
  double sum_rate = 0.0;
};

inline bool within_power_bounds(std::span<const double> p, double p_max) {
  return std::all_of(p.begin(), p.end(), [&](double v) { return v >= 0.0 && v <= p_max; });
}

/// Total transmit power of every cell.
inline std::vector<double> cell_power_totals(const NetworkScenario& s, std::span<const double> p) {
  std::vector<double> total(s.n_cells(), 0.0);
  const int k_users = s.users_per_cell();
  for (int l = 0; l < s.n_links(); ++l) total[l / k_users] += p[l];
  return total;
}

/// Interference plus noise seen by the receiver of `link`: co-cell links
/// through the serving gain, neighbor cells through their cross gains.
inline double interference_plus_noise(const NetworkScenario& s, const ChannelState& c,
                                      std::span<const double> p, std::span<const double> cell_totals, int link,
                                      double noise_mw) {
  const int cell = link / s.users_per_cell();
  const auto cells = s.local_cells(cell);
  double acc = c.gain(link, 0) * (cell_totals[cell] - p[link]);
  for (int m = 1; m < s.stride(); ++m) acc += c.gain(link, m) * cell_totals[cells[m]];
  return acc + noise_mw;
}

/// Uncapped linear SINR of every link.
inline std::vector<double> compute_sinr(const NetworkScenario& s, const ChannelState& c,
                                        std::span<const double> p, double noise_mw) {
  if (static_cast<int>(p.size()) != s.n_links()) throw std::invalid_argument("allocation size mismatch");
  const auto totals = cell_power_totals(s, p);
  std::vector<double> out(s.n_links());
  for (int l = 0; l < s.n_links(); ++l)
    out[l] = c.gain(l, 0) * p[l] / interference_plus_noise(s, c, p, totals, l, noise_mw);
  return out;
}

inline std::vector<double> compute_sinr(const NetworkScenario& s, const ChannelState& c,
                                        std::span<const double> p, const RadioParams& radio) {
  return compute_sinr(s, c, p, radio.noise_mw);
}

inline double cap_sinr(double sinr, double cap) { return std::min(sinr, cap); }

inline double rate_of(double sinr, double cap) { return std::log2(1.0 + cap_sinr(sinr, cap)); }

inline RateReport compute_rates(std::span<const double> sinr, double sinr_cap) {
  RateReport r;
  r.sinr.resize(sinr.size());
  r.rate.resize(sinr.size());
  for (std::size_t i = 0; i < sinr.size(); ++i) {
    if (sinr[i] < 0.0) throw std::invalid_argument("negative SINR");
    r.sinr[i] = cap_sinr(sinr[i], sinr_cap);
    r.rate[i] = std::log2(1.0 + r.sinr[i]);
  }
  r.sum_rate = std::accumulate(r.rate.begin(), r.rate.end(), 0.0);
  return r;
}

inline RateReport evaluate_rates(const NetworkScenario& s, const ChannelState& c, std::span<const double> p,
                                 const RadioParams& radio) {
  return compute_rates(compute_sinr(s, c, p, radio.noise_mw), radio.sinr_cap);
}

inline double sum_rate_per_ap(const RateReport& r) {
  return r.rate.empty() ? 0.0 : r.sum_rate / static_cast<double>(r.rate.size());
}

/// r_{n,k} = C_{n,k} + alpha (sum_{k' != k} C_{n,k'} + sum_{n' in D_n, j} C_{n',j}).
inline double local_reward(const NetworkScenario& s, std::span<const double> rates, int cell, int user,
                           double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  const int k_users = s.users_per_cell();
  const int own = link_index(cell, user, k_users);
  double others = 0.0;
  for (int j = 0; j < k_users; ++j)
    if (j != user) others += rates[link_index(cell, j, k_users)];
  for (int nb : s.neighborhood(cell))
    for (int j = 0; j < k_users; ++j) others += rates[link_index(nb, j, k_users)];
  return rates[own] + alpha * others;
}

/// local_reward for all links at once, via per-cell rate totals.
inline std::vector<double> local_rewards(const NetworkScenario& s, std::span<const double> rates, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  const auto totals = cell_power_totals(s, rates);  // same reduction, applied to rates
  std::vector<double> out(s.n_links());
  const int k_users = s.users_per_cell();
  for (int l = 0; l < s.n_links(); ++l) {
    const int cell = l / k_users;
    double others = totals[cell] - rates[l];
    for (int nb : s.neighborhood(cell)) others += totals[nb];
    out[l] = rates[l] + alpha * others;
  }
  return out;
}

/// Counts, for every link, the total weight with which its rate enters all
/// localized rewards; on a symmetric layout this is the same constant c for
/// every link and sum(r) = c * sum(C).
inline std::vector<double> reward_multiplicities(const NetworkScenario& s, double alpha) {
  const int k_users = s.users_per_cell();
  std::vector<double> mult(static_cast<std::size_t>(s.n_links()), 0.0);
  for (int n = 0; n < s.n_cells(); ++n)
    for (int k = 0; k < k_users; ++k) {
      // reward of (n, k) touches: itself, co-cell links, links of D_n
      mult[link_index(n, k, k_users)] += 1.0;
      for (int j = 0; j < k_users; ++j)
        if (j != k) mult[link_index(n, j, k_users)] += alpha;
      for (int nb : s.neighborhood(n))
        for (int j = 0; j < k_users; ++j) mult[link_index(nb, j, k_users)] += alpha;
    }
  return mult;
}

}  // namespace drlpa

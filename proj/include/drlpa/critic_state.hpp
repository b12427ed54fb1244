#pragma once

// Analytic local rate model feeding the DDPG critic: for one link, the rates
// of every link in its cell and interference neighborhood as a function of
// that link's own power, with derivatives.

#include <cmath>
#include <span>
#include <vector>

#include "drlpa/channel.hpp"
#include "drlpa/common.hpp"
#include "drlpa/features.hpp"
#include "drlpa/metrics.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

/// Sorted top-I_c local rates and d(rate)/d(own power) for each entry. The
/// sort permutation is fixed at evaluation time.
struct CriticState {
  std::vector<double> rates;     // non-increasing, length i_c
  std::vector<double> d_rates;   // d rates[i] / d own power, per mW
  std::vector<int> links;        // -1 for padding
};

class LocalRateModel {
 public:
  LocalRateModel(const NetworkScenario& s, const ChannelState& c, std::span<const double> powers,
                 const RadioParams& radio)
      : s_(s), c_(c), p_(powers.begin(), powers.end()), radio_(radio) {
    totals_ = cell_power_totals(s, p_);
    den_.resize(s.n_links());
    for (int l = 0; l < s.n_links(); ++l) den_[l] = interference_plus_noise(s, c, p_, totals_, l, radio.noise_mw);
  }

  /// Rates of all links in cell(link) and its neighborhood when `link`
  /// transmits own_power_mw and every other link keeps its power.
  CriticState evaluate(int link, double own_power_mw, int i_c) const {
    const int k_users = s_.users_per_cell();
    const int cell = link / k_users;
    const double delta = own_power_mw - p_[link];
    const double ln2 = std::log(2.0);

    std::vector<double> rate;
    std::vector<double> drate;
    std::vector<int> ids;
    const int n_cand = s_.stride() * k_users;
    rate.reserve(n_cand);
    drate.reserve(n_cand);
    ids.reserve(n_cand);

    auto push = [&](int j, double sinr, double dsinr) {
      if (sinr < radio_.sinr_cap) {
        rate.push_back(std::log2(1.0 + sinr));
        drate.push_back(dsinr / ((1.0 + sinr) * ln2));
      } else {
        rate.push_back(std::log2(1.0 + radio_.sinr_cap));
        drate.push_back(0.0);
      }
      ids.push_back(j);
    };

    for (int nb : s_.local_cells(cell)) {
      // Slot of the acting BS in receiver j's local list.
      const int m = s_.local_slot(nb, cell);
      for (int u = 0; u < k_users; ++u) {
        const int j = link_index(nb, u, k_users);
        if (j == link) {
          const double g = c_.gain(j, 0);
          push(j, g * own_power_mw / den_[j], g / den_[j]);
          continue;
        }
        const double signal = c_.gain(j, 0) * p_[j];
        if (m < 0) {
          push(j, signal / den_[j], 0.0);
          continue;
        }
        const double g = c_.gain(j, m);
        const double den = den_[j] + g * delta;
        push(j, signal / den, -signal * g / (den * den));
      }
    }

    const auto keep = top_indices(rate, ids, i_c);
    CriticState out;
    out.rates.reserve(i_c);
    for (int idx : keep) {
      out.rates.push_back(rate[idx]);
      out.d_rates.push_back(drate[idx]);
      out.links.push_back(ids[idx]);
    }
    while (static_cast<int>(out.rates.size()) < i_c) {
      out.rates.push_back(0.0);
      out.d_rates.push_back(0.0);
      out.links.push_back(-1);
    }
    return out;
  }

  double power(int link) const { return p_[link]; }

 private:
  const NetworkScenario& s_;
  const ChannelState& c_;
  std::vector<double> p_;
  RadioParams radio_;
  std::vector<double> totals_;
  std::vector<double> den_;
};

}  // namespace drlpa

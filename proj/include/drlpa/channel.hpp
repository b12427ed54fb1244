#pragma once

// Small-scale fading: first-order complex Gauss-Markov (Jakes) process and
// the per-slot gains g = |h|^2 beta.

#include <cmath>
#include <complex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "drlpa/common.hpp"
#include "drlpa/topology.hpp"

namespace drlpa {

/// Zero-order Bessel function of the first kind. Power series in extended
/// precision up to |x| = 25, Hankel asymptotic expansion beyond.
inline double bessel_j0(double x) {
  x = std::abs(x);
  if (x <= 25.0) {
    const long double q = static_cast<long double>(x) * x / 4.0L;
    long double term = 1.0L;
    long double sum = 1.0L;
    for (int m = 1; m < 200; ++m) {
      term *= -q / (static_cast<long double>(m) * m);
      sum += term;
      if (std::abs(term) < 1e-22L * std::abs(sum) && m > q) break;
    }
    return static_cast<double>(sum);
  }
  // a_k = prod_{i<=k} (-(2i-1)^2) / (k! 8^k)
  const double omega = x - M_PI / 4.0;
  double p = 1.0;
  double q = 0.0;
  double a = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= -odd * odd / (k * 8.0 * x);
    if (std::abs(a) > prev) break;  // series started diverging
    prev = std::abs(a);
    // (-1)^j a_{2j} feeds P, (-1)^j a_{2j+1} feeds Q.
    const int j = k / 2;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0)
      p += sign * a;
    else
      q += sign * a;
    if (std::abs(a) < 1e-18) break;
  }
  return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(omega) - q * std::sin(omega));
}

/// Lag-one correlation of the Jakes model, J0(2 pi f_d T_s).
inline double jakes_correlation(double f_d_hz, double t_s_sec) {
  return bessel_j0(2.0 * M_PI * f_d_hz * t_s_sec);
}

/// Per-slot channel for every materialized (tx cell, receiver link) pair,
/// laid out like NetworkScenario::beta().
struct ChannelState {
  std::vector<std::complex<double>> h;
  std::vector<double> beta;
  std::vector<double> g;
  int stride = 1;
  int slot = 1;
  double rho = 0.0;

  double gain(int link, int local_slot) const { return g[static_cast<std::size_t>(link) * stride + local_slot]; }

  void refresh_gains() {
    for (std::size_t i = 0; i < h.size(); ++i) g[i] = std::norm(h[i]) * beta[i];
  }

  /// Channel with h = 1 everywhere, so g equals the scenario's beta.
  static ChannelState unit(const NetworkScenario& s) {
    ChannelState c;
    c.stride = s.stride();
    c.beta.assign(s.beta().begin(), s.beta().end());
    c.h.assign(c.beta.size(), {1.0, 0.0});
    c.g = c.beta;
    return c;
  }
};

/// One CN(0, variance) draw: independent real normals with variance/2 each.
inline std::complex<double> complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline ChannelState init_channel(const NetworkScenario& s, double f_d_hz, double t_s_sec, Rng& rng) {
  if (!(t_s_sec > 0.0)) throw std::invalid_argument("t_s_sec must be positive");
  if (f_d_hz < 0.0) throw std::invalid_argument("f_d_hz must be non-negative");
  ChannelState c = ChannelState::unit(s);
  c.rho = jakes_correlation(f_d_hz, t_s_sec);
  c.slot = 1;
  for (auto& v : c.h) v = complex_normal(rng, 1.0);
  c.refresh_gains();
  return c;
}

inline ChannelState init_channel(const NetworkScenario& s, double f_d_hz, double t_s_sec,
                                 std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return init_channel(s, f_d_hz, t_s_sec, rng);
}

/// h_t = rho h_{t-1} + n_t with n_t ~ CN(0, 1 - rho^2).
inline void step_channel(ChannelState& c, Rng& rng) {
  if (c.rho != 1.0) {
    const double innovation = 1.0 - c.rho * c.rho;
    for (auto& v : c.h) v = c.rho * v + complex_normal(rng, innovation);
  }
  c.refresh_gains();
  ++c.slot;
}

/// CSV dump of one slot: slot, receiver link, tx cell, |h|^2, g in dB.
inline void write_channel_trace(std::ostream& os, const NetworkScenario& s, const ChannelState& c,
                                bool header) {
  if (header) os << "slot,rx_cell,rx_user,tx_cell,h_abs2,g_db\n";
  const int k_users = s.users_per_cell();
  for (int l = 0; l < s.n_links(); ++l) {
    const int cell = l / k_users;
    const auto cells = s.local_cells(cell);
    for (int m = 0; m < s.stride(); ++m) {
      const std::size_t i = static_cast<std::size_t>(l) * c.stride + m;
      os << c.slot << ',' << cell << ',' << l % k_users << ',' << cells[m] << ',' << std::norm(c.h[i]) << ','
         << linear_to_db(c.g[i]) << '\n';
    }
  }
}

}  // namespace drlpa

#pragma once

// Cell layout: hexagonal lattice wrapped on a rhombic torus, access-point
// placement and large-scale fading.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpa/common.hpp"

namespace drlpa {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }

enum class Placement {
  kUniformArea,    // radius ~ sqrt(u) over the annulus
  kUniformRadius,  // radius ~ u
};

/// Large-scale gain in dB for a link of length d_km with shadowing draw z
/// (linear): -120.9 - 37.6 log10(d) + 10 log10(z).
inline double large_scale_gain_db(double d_km, double z = 1.0) {
  return -120.9 - 37.6 * std::log10(d_km) + 10.0 * std::log10(z);
}

/// Static geometry of one network realization.
///
/// Receivers are links (n, k) indexed n * K + k. For every receiver only the
/// serving cell and its interference neighborhood are materialized: slot 0 of
/// local_cells(n) is n itself and slots 1..|D_n| are D_n in order. Per-link
/// arrays (beta, channel gains) are laid out [link * stride() + slot].
class NetworkScenario {
 public:
  NetworkScenario() = default;

  /// Builds a scenario with explicit neighborhoods and unit beta. Used for
  /// hand-built toys and as the base of build_scenario.
  static NetworkScenario from_neighborhoods(int n_cells, int users_per_cell,
                                            std::vector<std::vector<int>> neighborhoods) {
    if (n_cells <= 0) throw std::invalid_argument("n_cells must be positive");
    if (users_per_cell <= 0) throw std::invalid_argument("users_per_cell must be positive");
    if (static_cast<int>(neighborhoods.size()) != n_cells)
      throw std::invalid_argument("one neighborhood per cell required");
    const std::size_t dn = neighborhoods.front().size();
    NetworkScenario s;
    s.n_cells_ = n_cells;
    s.users_ = users_per_cell;
    s.stride_ = static_cast<int>(dn) + 1;
    s.local_.assign(static_cast<std::size_t>(n_cells) * s.stride_, 0);
    s.slot_of_.assign(static_cast<std::size_t>(n_cells) * n_cells, -1);
    for (int n = 0; n < n_cells; ++n) {
      const auto& d = neighborhoods[n];
      if (d.size() != dn) throw std::invalid_argument("neighborhood sizes differ");
      s.local_[n * s.stride_] = n;
      s.slot_of_[static_cast<std::size_t>(n) * n_cells + n] = 0;
      for (std::size_t i = 0; i < dn; ++i) {
        const int m = d[i];
        if (m < 0 || m >= n_cells || m == n)
          throw std::invalid_argument("invalid neighbor index in cell " + std::to_string(n));
        if (s.slot_of_[static_cast<std::size_t>(n) * n_cells + m] != -1)
          throw std::invalid_argument("duplicate neighbor in cell " + std::to_string(n));
        s.local_[n * s.stride_ + 1 + static_cast<int>(i)] = m;
        s.slot_of_[static_cast<std::size_t>(n) * n_cells + m] = static_cast<int>(i) + 1;
      }
    }
    s.beta_.assign(static_cast<std::size_t>(s.n_links()) * s.stride_, 1.0);
    s.bs_.assign(n_cells, Point{});
    s.ap_.assign(s.n_links(), Point{});
    return s;
  }

  int n_cells() const { return n_cells_; }
  int users_per_cell() const { return users_; }
  int n_links() const { return n_cells_ * users_; }
  /// 1 + |D_n|.
  int stride() const { return stride_; }
  int neighborhood_size() const { return stride_ - 1; }

  std::span<const int> local_cells(int cell) const {
    check_cell(cell);
    return {local_.data() + static_cast<std::size_t>(cell) * stride_,
            static_cast<std::size_t>(stride_)};
  }
  std::span<const int> neighborhood(int cell) const { return local_cells(cell).subspan(1); }

  /// Position of tx_cell within local_cells(cell), or -1 when it is not local.
  int local_slot(int cell, int tx_cell) const {
    return slot_of_[static_cast<std::size_t>(cell) * n_cells_ + tx_cell];
  }

  double beta(int link, int slot) const { return beta_[static_cast<std::size_t>(link) * stride_ + slot]; }
  std::span<const double> beta() const { return beta_; }
  std::span<double> mutable_beta() { return beta_; }

  const std::vector<Point>& bs_positions() const { return bs_; }
  const std::vector<Point>& ap_positions() const { return ap_; }

  double r_min_km = 0.0;
  double r_max_km = 0.0;
  int lattice_side = 0;  // 0 when not built on the hex torus

 private:
  void check_cell(int cell) const {
    if (cell < 0 || cell >= n_cells_)
      throw std::out_of_range("cell index " + std::to_string(cell) + " out of range");
  }

  friend NetworkScenario build_scenario(int, int, double, double, double, std::uint64_t, Placement);
  friend NetworkScenario scenario_from_json(const nlohmann::json&);

  int n_cells_ = 0;
  int users_ = 0;
  int stride_ = 1;
  std::vector<int> local_;
  std::vector<int> slot_of_;
  std::vector<double> beta_;
  std::vector<Point> bs_;
  std::vector<Point> ap_;
};

inline std::span<const int> neighborhood(const NetworkScenario& s, int cell) {
  return s.neighborhood(cell);
}

namespace hex {

/// Hex distance between axial offsets.
inline int axial_distance(int dq, int dr) {
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

/// Minimum hex distance between two cells of a side x side torus.
inline int wrapped_distance(int side, int a, int b) {
  const int dq0 = (b % side) - (a % side);
  const int dr0 = (b / side) - (a / side);
  int best = 1 << 30;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) best = std::min(best, axial_distance(dq0 + i * side, dr0 + j * side));
  return best;
}

/// Cartesian coordinates of cell `c` with unit cell-to-cell spacing.
inline Point center(int side, int c) {
  const int q = c % side;
  const int r = c / side;
  return {q + 0.5 * r, 0.5 * std::sqrt(3.0) * r};
}

/// Shortest displacement between two points on the torus spanned by
/// side * (1, 0) and side * (1/2, sqrt(3)/2), in units of `spacing`.
inline Point wrapped_displacement(int side, double spacing, Point d) {
  const double ax = side * spacing;
  const double bx = 0.5 * side * spacing;
  const double by = 0.5 * std::sqrt(3.0) * side * spacing;
  // Reduce to the fundamental rhombus, then check the nearest images.
  const double v = d.y / by;
  const double u = (d.x - v * bx) / ax;
  const double fu = u - std::round(u);
  const double fv = v - std::round(v);
  const Point base{fu * ax + fv * bx, fv * by};
  Point best = base;
  double best_n = norm(base);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) {
      const Point p{base.x + i * ax + j * bx, base.y + j * by};
      const double n = norm(p);
      if (n < best_n) {
        best_n = n;
        best = p;
      }
    }
  return best;
}

/// The two-ring interference neighborhood of every cell on a side x side
/// torus, ordered by ascending wrapped Euclidean distance, ties by index.
inline std::vector<std::vector<int>> two_ring_neighborhoods(int side) {
  const int n = side * side;
  std::vector<std::vector<int>> out(n);
  for (int c = 0; c < n; ++c) {
    std::vector<std::pair<double, int>> cand;
    for (int m = 0; m < n; ++m) {
      if (m == c) continue;
      const int d = wrapped_distance(side, c, m);
      if (d >= 1 && d <= 2) {
        const Point a = center(side, c);
        const Point b = center(side, m);
        const Point w = wrapped_displacement(side, 1.0, {b.x - a.x, b.y - a.y});
        cand.emplace_back(norm(w), m);
      }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
      if (std::abs(x.first - y.first) > 1e-9) return x.first < y.first;
      return x.second < y.second;
    });
    for (const auto& [dist, m] : cand) out[c].push_back(m);
  }
  return out;
}

}  // namespace hex

/// Lattice side for n_cells, or throws if the torus cannot host two full
/// interference rings.
inline int lattice_side_for(int n_cells) {
  if (n_cells <= 0) throw std::invalid_argument("n_cells must be positive");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_cells))));
  if (side * side != n_cells)
    throw std::invalid_argument("n_cells must be a perfect square for the hex torus, got " +
                                std::to_string(n_cells));
  if (side < 5)
    throw std::invalid_argument("hex torus needs n_cells >= 25 for two distinct rings, got " +
                                std::to_string(n_cells));
  return side;
}

/// Builds a hex-torus scenario: BS spacing 2 * r_max_km, K APs per cell drawn
/// in the annulus [r_min_km, r_max_km] around their BS, and per-(tx cell,
/// receiver link) shadowing with standard deviation shadow_sigma_db.
inline NetworkScenario build_scenario(int n_cells, int users_per_cell, double r_min_km, double r_max_km,
                                      double shadow_sigma_db, std::uint64_t rng_seed,
                                      Placement placement = Placement::kUniformArea) {
  if (!(r_min_km > 0.0) || !(r_max_km > 0.0)) throw std::invalid_argument("radii must be positive");
  if (!(r_min_km < r_max_km)) throw std::invalid_argument("r_min_km must be below r_max_km");
  if (shadow_sigma_db < 0.0) throw std::invalid_argument("shadow_sigma_db must be non-negative");
  const int side = lattice_side_for(n_cells);

  NetworkScenario s =
      NetworkScenario::from_neighborhoods(n_cells, users_per_cell, hex::two_ring_neighborhoods(side));
  s.r_min_km = r_min_km;
  s.r_max_km = r_max_km;
  s.lattice_side = side;

  const double spacing = 2.0 * r_max_km;
  for (int c = 0; c < n_cells; ++c) {
    const Point p = hex::center(side, c);
    s.bs_[c] = {p.x * spacing, p.y * spacing};
  }

  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> shadow(0.0, shadow_sigma_db);
  const double r2min = r_min_km * r_min_km;
  const double r2max = r_max_km * r_max_km;
  for (int n = 0; n < n_cells; ++n) {
    for (int k = 0; k < users_per_cell; ++k) {
      const double u = unit(rng);
      const double r = placement == Placement::kUniformArea
                           ? std::sqrt(r2min + u * (r2max - r2min))
                           : r_min_km + u * (r_max_km - r_min_km);
      const double theta = 2.0 * M_PI * unit(rng);
      s.ap_[link_index(n, k, users_per_cell)] = {s.bs_[n].x + r * std::cos(theta),
                                                 s.bs_[n].y + r * std::sin(theta)};
    }
  }
  for (int n = 0; n < n_cells; ++n) {
    const auto cells = s.local_cells(n);
    for (int k = 0; k < users_per_cell; ++k) {
      const int l = link_index(n, k, users_per_cell);
      for (int m = 0; m < s.stride_; ++m) {
        const Point bs = s.bs_[cells[m]];
        const Point d = hex::wrapped_displacement(side, spacing, {s.ap_[l].x - bs.x, s.ap_[l].y - bs.y});
        const double z_db = shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;
        s.beta_[static_cast<std::size_t>(l) * s.stride_ + m] = db_to_linear(large_scale_gain_db(norm(d)) + z_db);
      }
    }
  }
  return s;
}

/// Distance from the AP of `link` to its serving BS (km), torus-wrapped.
inline double serving_distance_km(const NetworkScenario& s, int link) {
  const int cell = link / s.users_per_cell();
  const Point ap = s.ap_positions()[link];
  const Point bs = s.bs_positions()[cell];
  const Point d{ap.x - bs.x, ap.y - bs.y};
  if (s.lattice_side == 0) return norm(d);
  return norm(hex::wrapped_displacement(s.lattice_side, 2.0 * s.r_max_km, d));
}

inline constexpr int kScenarioFormatVersion = 1;

inline nlohmann::json scenario_to_json(const NetworkScenario& s) {
  nlohmann::json j;
  j["format"] = "drlpa.scenario";
  j["version"] = kScenarioFormatVersion;
  j["n_cells"] = s.n_cells();
  j["users_per_cell"] = s.users_per_cell();
  j["r_min_km"] = s.r_min_km;
  j["r_max_km"] = s.r_max_km;
  j["lattice_side"] = s.lattice_side;
  auto pts = [](const std::vector<Point>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.x, p.y});
    return a;
  };
  j["bs_positions_km"] = pts(s.bs_positions());
  j["ap_positions_km"] = pts(s.ap_positions());
  nlohmann::json hoods = nlohmann::json::array();
  for (int n = 0; n < s.n_cells(); ++n) {
    const auto d = s.neighborhood(n);
    hoods.push_back(std::vector<int>(d.begin(), d.end()));
  }
  j["neighborhoods"] = hoods;
  std::vector<double> beta_db;
  beta_db.reserve(s.beta().size());
  for (double b : s.beta()) beta_db.push_back(linear_to_db(b));
  j["beta_db"] = beta_db;
  return j;
}

inline NetworkScenario scenario_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "drlpa.scenario") throw std::invalid_argument("not a scenario document");
  if (j.at("version").get<int>() != kScenarioFormatVersion)
    throw std::invalid_argument("unsupported scenario version");
  NetworkScenario s = NetworkScenario::from_neighborhoods(
      j.at("n_cells").get<int>(), j.at("users_per_cell").get<int>(),
      j.at("neighborhoods").get<std::vector<std::vector<int>>>());
  s.r_min_km = j.at("r_min_km").get<double>();
  s.r_max_km = j.at("r_max_km").get<double>();
  s.lattice_side = j.at("lattice_side").get<int>();
  auto read_pts = [](const nlohmann::json& a, std::vector<Point>& out) {
    out.clear();
    for (const auto& p : a) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  };
  read_pts(j.at("bs_positions_km"), s.bs_);
  read_pts(j.at("ap_positions_km"), s.ap_);
  const auto beta_db = j.at("beta_db").get<std::vector<double>>();
  if (beta_db.size() != s.beta_.size()) throw std::invalid_argument("beta_db size mismatch");
  for (std::size_t i = 0; i < beta_db.size(); ++i) s.beta_[i] = db_to_linear(beta_db[i]);
  return s;
}

}  // namespace drlpa

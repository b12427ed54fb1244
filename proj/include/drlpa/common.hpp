#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace drlpa {

using Rng = std::mt19937_64;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

/// Radio constants shared by the rate model, the action codecs and the
/// feature extractor. Powers in mW, noise in mW, SINR cap linear.
struct RadioParams {
  double p_max_mw = dbm_to_mw(38.0);
  double p_min_mw = dbm_to_mw(5.0);
  double noise_mw = dbm_to_mw(-114.0);
  double sinr_cap = db_to_linear(30.0);
};

/// Link (n, k) is stored at index n * users_per_cell + k.
struct LinkId {
  int cell = 0;
  int user = 0;
};

inline int link_index(int cell, int user, int users_per_cell) {
  return cell * users_per_cell + user;
}

/// Derives an independent stream seed from a base seed and a stream tag
/// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace drlpa

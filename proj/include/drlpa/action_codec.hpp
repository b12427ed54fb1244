#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "drlpa/neural.hpp"

namespace drlpa {

/// Maps network outputs to transmit powers (mW).
///
/// Discrete mode: level 0 is silence, levels 1..|A|-1 are geometric between
/// p_min and p_max (equal steps in dB). Continuous mode: p_max * sigmoid(x).
class ActionCodec {
 public:
  static ActionCodec discrete(int levels, double p_min_mw, double p_max_mw) {
    if (levels < 3) throw std::invalid_argument("discrete codec needs at least 3 levels");
    if (!(p_min_mw > 0.0) || !(p_max_mw > p_min_mw)) throw std::invalid_argument("need 0 < p_min < p_max");
    ActionCodec c;
    c.continuous_ = false;
    c.p_min_ = p_min_mw;
    c.p_max_ = p_max_mw;
    c.levels_.push_back(0.0);
    const int steps = levels - 2;
    for (int i = 0; i <= steps; ++i)
      c.levels_.push_back(p_min_mw * std::pow(p_max_mw / p_min_mw, static_cast<double>(i) / steps));
    c.levels_.back() = p_max_mw;
    return c;
  }

  static ActionCodec continuous(double p_max_mw) {
    if (!(p_max_mw > 0.0)) throw std::invalid_argument("p_max must be positive");
    ActionCodec c;
    c.continuous_ = true;
    c.p_max_ = p_max_mw;
    return c;
  }

  bool is_continuous() const { return continuous_; }
  int size() const { return static_cast<int>(levels_.size()); }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }
  const std::vector<double>& levels() const { return levels_; }

  double power_of(int index) const {
    if (continuous_) throw std::logic_error("continuous codec has no discrete levels");
    if (index < 0 || index >= size())
      throw std::out_of_range("action index " + std::to_string(index) + " outside [0, " + std::to_string(size()) +
                              ")");
    return levels_[index];
  }

  /// Nearest discrete level, compared in linear mW.
  int index_of(double power_mw) const {
    if (continuous_) throw std::logic_error("continuous codec has no discrete levels");
    int best = 0;
    for (int i = 1; i < size(); ++i)
      if (std::abs(levels_[i] - power_mw) < std::abs(levels_[best] - power_mw)) best = i;
    return best;
  }

  double power_from_preactivation(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite pre-activation");
    return p_max_ * sigmoid(x);
  }

 private:
  bool continuous_ = false;
  double p_min_ = 0.0;
  double p_max_ = 0.0;
  std::vector<double> levels_;
};

}  // namespace drlpa

#pragma once

// Online tracking controller: retrain only while the critic's normalized
// loss over a rolling window exceeds a threshold.

#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <utility>

namespace drlpa {

enum class TrackingDecision { kSkip, kTrain };

struct TrackingConfig {
  int window = 100;
  double l_max = 0.05;
  double reward_floor = 1e-8;  // |r| below this is dropped from the window
};

class TrackingController {
 public:
  explicit TrackingController(TrackingConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.window < 1) throw std::invalid_argument("tracking window must be >= 1");
    if (cfg_.l_max < 0.0) throw std::invalid_argument("tracking threshold must be >= 0");
  }

  void push(double q, double r) {
    if (std::abs(r) < cfg_.reward_floor) return;
    window_.emplace_back(q, r);
    while (static_cast<int>(window_.size()) > cfg_.window) window_.pop_front();
  }

  /// l_c = 1 / (2 |W|) sum_W (1 - Q / r)^2.
  double loss() const {
    if (window_.empty()) throw std::logic_error("tracking window is empty");
    double acc = 0.0;
    for (const auto& [q, r] : window_) {
      const double e = 1.0 - q / r;
      acc += e * e;
    }
    return acc / (2.0 * static_cast<double>(window_.size()));
  }

  TrackingDecision decide() const { return loss() > cfg_.l_max ? TrackingDecision::kTrain : TrackingDecision::kSkip; }

  /// Pushes the pairs, then decides.
  TrackingDecision step(std::span<const double> q, std::span<const double> r) {
    if (q.size() != r.size()) throw std::invalid_argument("critic outputs and rewards differ in length");
    for (std::size_t i = 0; i < q.size(); ++i) push(q[i], r[i]);
    return decide();
  }

  int size() const { return static_cast<int>(window_.size()); }
  bool full() const { return size() == cfg_.window; }
  const TrackingConfig& config() const { return cfg_; }
  void clear() { window_.clear(); }

 private:
  TrackingConfig cfg_;
  std::deque<std::pair<double, double>> window_;
};

}  // namespace drlpa

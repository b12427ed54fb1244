#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "drlpa/common.hpp"

namespace drlpa {

/// Fixed-capacity ring buffer; push overwrites the oldest entry when full.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// Uniform minibatch, without replacement within the batch.
  std::vector<T> sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size > items_.size())
      throw std::out_of_range("cannot sample " + std::to_string(batch_size) + " items from a buffer holding " +
                              std::to_string(items_.size()));
    // Partial Fisher-Yates over indices.
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<T> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.push_back(items_[idx[i]]);
    }
    return out;
  }

  /// Contents from oldest to newest.
  std::vector<T> snapshot() const {
    std::vector<T> out;
    out.reserve(items_.size());
    const std::size_t start = items_.size() < capacity_ ? 0 : cursor_;
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(start + i) % items_.size()]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<T> items_;
};

}  // namespace drlpa

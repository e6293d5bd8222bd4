#pragma once

#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

namespace unicor {

// Fixed-capacity FIFO of embedding vectors; pushing beyond capacity
// evicts the oldest entries.
class FifoQueue {
 public:
  explicit FifoQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("queue capacity must be >= 1");
  }

  void push(std::vector<double> v) {
    items_.push_back(std::move(v));
    while (items_.size() > capacity_) items_.pop_front();
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const std::vector<double>& at(std::size_t i) const { return items_.at(i); }

  // Views over current contents, oldest first. Valid until the next push.
  std::vector<std::span<const double>> snapshot() const {
    std::vector<std::span<const double>> out;
    out.reserve(items_.size());
    for (const auto& v : items_) out.emplace_back(v.data(), v.size());
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<std::vector<double>> items_;
};

// The four MoCo queues: momentum-encoder outputs for code, augmented
// code, NL, and augmented NL.
struct QueueSet {
  FifoQueue code;
  FifoQueue code_star;
  FifoQueue nl;
  FifoQueue nl_star;

  explicit QueueSet(std::size_t capacity)
      : code(capacity), code_star(capacity), nl(capacity), nl_star(capacity) {}
};

}  // namespace unicor

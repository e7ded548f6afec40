#pragma once

#include "macs/mdp.hpp"
#include "macs/rng.hpp"

#include <cstddef>
#include <vector>

namespace macs {

// Bounded FIFO transition store with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Evicts the oldest transition when full. A transition whose dimensions
  // differ from the first one stored is rejected with DimensionError and the
  // buffer is left unchanged.
  void push(Transition transition);
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  // Oldest-first.
  const Transition& at(std::size_t i) const;
  void clear();

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t oldest_ = 0;
  Eigen::Index state_dim_ = -1;
  Eigen::Index action_dim_ = -1;
};

}  // namespace macs

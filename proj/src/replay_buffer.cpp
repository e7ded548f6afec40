#include "macs/replay_buffer.hpp"

#include "macs/error.hpp"

namespace macs {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1u << 16));
}

void ReplayBuffer::push(Transition t) {
  t.validate();
  if (state_dim_ >= 0 && (t.state.size() != state_dim_ || t.action.size() != action_dim_)) {
    throw DimensionError("transition dimensions differ from the buffer's");
  }
  if (state_dim_ < 0) {
    state_dim_ = t.state.size();
    action_dim_ = t.action.size();
  }
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[oldest_] = std::move(t);
    oldest_ = (oldest_ + 1) % capacity_;
  }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n > data_.size()) {
    throw InsufficientData("requested " + std::to_string(n) + " transitions, buffer holds " +
                           std::to_string(data_.size()));
  }
  std::vector<Transition> batch;
  batch.reserve(n);
  if (n == 0) return batch;
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(data_[pick(rng)]);
  return batch;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay buffer index");
  return data_[(oldest_ + i) % data_.size()];
}

void ReplayBuffer::clear() {
  data_.clear();
  oldest_ = 0;
  state_dim_ = -1;
  action_dim_ = -1;
}

}  // namespace macs

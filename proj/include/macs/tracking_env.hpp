#pragma once

#include "macs/mdp.hpp"
#include "macs/rng.hpp"

namespace macs {

// One-dimensional target tracking: the state is a target x drawn uniformly from
// [-1, 1] each step and the reward is 1 - (x - a)^2. The optimal per-step
// reward is exactly 1.
class TrackingEnv final : public Environment {
 public:
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  RewardRange reward_range() const override { return {-3.0, 1.0}; }

  StateVec reset(std::uint64_t seed) override;
  StepResult step(const ActionVec& action) override;
  std::unique_ptr<Environment> branch() const override {
    return std::make_unique<TrackingEnv>(*this);
  }
  const StateVec& state() const override { return state_; }
  void force_state(const StateVec& state) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

 private:
  StateVec state_ = StateVec::Zero(1);
  Rng rng_;
};

}  // namespace macs

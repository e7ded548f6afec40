#include "macs/tracking_env.hpp"

#include "macs/error.hpp"

namespace macs {

StateVec TrackingEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_[0] = 2.0 * uniform01(rng_) - 1.0;
  was_reset_ = true;
  return state_;
}

StepResult TrackingEnv::step(const ActionVec& action) {
  require_reset();
  check_action(action);
  const double err = state_[0] - action[0];
  const double reward = 1.0 - err * err;
  state_[0] = 2.0 * uniform01(rng_) - 1.0;
  return {state_, reward, false};
}

void TrackingEnv::force_state(const StateVec& state) {
  require_reset();
  if (state.size() != 1) throw DimensionError("tracking state is one-dimensional");
  state_ = state;
}

}  // namespace macs

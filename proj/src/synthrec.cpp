#include "macs/synthrec.hpp"

#include "macs/error.hpp"

#include <cmath>
#include <string>

namespace macs {

void SynthRecConfig::validate() const {
  if (n_static < 0 || n_dynamic < 0 || item_dim < 1 || history_len < 1) {
    throw ConfigError("synthrec dimensions must be non-negative, item_dim and "
                      "history_len at least 1");
  }
  if (essential_static_count < 0 || essential_static_count > n_static) {
    throw ConfigError("essential_static_count must lie in [0, n_static]");
  }
  if (trivial_count() < 1) {
    throw ConfigError("synthrec needs at least one trivial state dimension");
  }
  if (!(drift_rate >= 0.0) || !std::isfinite(drift_rate)) {
    throw ConfigError("drift_rate must be a finite non-negative number");
  }
  if (!(click_weight_scale >= 0.0) || !std::isfinite(click_weight_scale)) {
    throw ConfigError("click_weight_scale must be finite and non-negative");
  }
  if (!(history_weight_scale >= 0.0) || !std::isfinite(history_weight_scale)) {
    throw ConfigError("history_weight_scale must be finite and non-negative");
  }
}

SynthRecEnv::SynthRecEnv(SynthRecConfig config) : config_(config) {
  config_.validate();
  for (int i = 0; i < config_.essential_static_count; ++i) essential_index_.push_back(i);
  for (int i = 0; i < config_.n_dynamic; ++i) {
    essential_index_.push_back(config_.n_static + i);
  }
  for (int i = 0; i < config_.item_dim; ++i) essential_index_.push_back(history_offset(0) + i);

  Rng world(derive_seed(config_.seed, 0x5157));
  click_weights_.resize(static_cast<Eigen::Index>(essential_index_.size()));
  const int n_history_start = config_.essential_static_count + config_.n_dynamic;
  for (Eigen::Index j = 0; j < click_weights_.size(); ++j) {
    const double z = standard_normal(world);
    // History weights are positive: users favour items close to the last one.
    click_weights_[j] = j >= n_history_start ? config_.history_weight_scale * std::abs(z)
                                             : config_.click_weight_scale * z;
  }
  drift_map_.resize(config_.n_dynamic, config_.item_dim);
  const double drift_scale = 1.0 / std::sqrt(static_cast<double>(config_.item_dim));
  for (Eigen::Index r = 0; r < drift_map_.rows(); ++r) {
    for (Eigen::Index c = 0; c < drift_map_.cols(); ++c) {
      drift_map_(r, c) = drift_scale * standard_normal(world);
    }
  }
  state_ = StateVec::Zero(config_.state_dim());
}

void SynthRecEnv::set_click_weights(const Eigen::VectorXd& weights) {
  if (weights.size() != click_weights_.size()) {
    throw DimensionError("click weight vector must have one entry per essential coordinate");
  }
  click_weights_ = weights;
}

int SynthRecEnv::paired_action(int j) const {
  const int n_history_start = config_.essential_static_count + config_.n_dynamic;
  if (j >= n_history_start) return j - n_history_start;
  if (j >= config_.essential_static_count) {
    return (j - config_.essential_static_count) % config_.item_dim;
  }
  return j % config_.item_dim;
}

StateVec SynthRecEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_.setZero();
  for (int i = 0; i < config_.n_static; ++i) {
    state_[i] = uniform01(rng_) < 0.5 ? 1.0 : 0.0;
  }
  if (config_.n_dynamic > 0) {
    Eigen::VectorXd d(config_.n_dynamic);
    do {
      for (int i = 0; i < config_.n_dynamic; ++i) d[i] = standard_normal(rng_);
    } while (d.norm() == 0.0);
    state_.segment(config_.n_static, config_.n_dynamic) = d / d.norm();
  }
  for (int slot = 0; slot < config_.history_len; ++slot) {
    for (int i = 0; i < config_.item_dim; ++i) {
      state_[history_offset(slot) + i] = uniform01(rng_) < 0.5 ? 1.0 : -1.0;
    }
  }
  was_reset_ = true;
  return state_;
}

double SynthRecEnv::click_probability(const StateVec& state,
                                      const ActionVec& action) const {
  if (state.size() != state_dim() || action.size() != action_dim()) {
    throw DimensionError("click_probability: state or action has the wrong length");
  }
  double logit = 0.0;
  for (std::size_t j = 0; j < essential_index_.size(); ++j) {
    logit += click_weights_[static_cast<Eigen::Index>(j)] * state[essential_index_[j]] *
             action[paired_action(static_cast<int>(j))];
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

StepResult SynthRecEnv::step(const ActionVec& action) {
  require_reset();
  check_action(action);
  // Noise draws are identical in number and order for every action, so a
  // branch stepped with a different action consumes the same exogenous noise.
  const double u = uniform01(rng_);
  Eigen::VectorXd xi(config_.n_dynamic);
  for (int i = 0; i < config_.n_dynamic; ++i) xi[i] = standard_normal(rng_);
  Eigen::VectorXd context(config_.n_static - config_.essential_static_count);
  for (Eigen::Index i = 0; i < context.size(); ++i) {
    context[i] = uniform01(rng_) < 0.5 ? 1.0 : 0.0;
  }

  const double p = click_probability(state_, action);
  const double reward = u < p ? 1.0 : 0.0;

  for (int slot = config_.history_len - 1; slot > 0; --slot) {
    state_.segment(history_offset(slot), config_.item_dim) =
        state_.segment(history_offset(slot - 1), config_.item_dim);
  }
  for (int i = 0; i < config_.item_dim; ++i) {
    state_[history_offset(0) + i] = action[i] >= 0.0 ? 1.0 : -1.0;
  }

  if (config_.n_dynamic > 0) {
    Eigen::VectorXd d = state_.segment(config_.n_static, config_.n_dynamic);
    Eigen::VectorXd moved = d + config_.drift_rate * (drift_map_ * action + xi);
    const double norm = moved.norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      state_.segment(config_.n_static, config_.n_dynamic) = moved / norm;
    }
  }
  state_.segment(config_.essential_static_count, context.size()) = context;

  return {state_, reward, false};
}

std::unique_ptr<Environment> SynthRecEnv::branch() const {
  return std::make_unique<SynthRecEnv>(*this);
}

void SynthRecEnv::force_state(const StateVec& state) {
  require_reset();
  if (state.size() != state_dim()) throw DimensionError("forced state has the wrong length");
  if (!state.allFinite()) throw DimensionError("forced state has non-finite entries");
  state_ = state;
}

StateMasks SynthRecEnv::ground_truth_masks() const {
  StateMasks masks;
  std::vector<bool> essential(static_cast<std::size_t>(state_dim()), false);
  for (int i : essential_index_) essential[static_cast<std::size_t>(i)] = true;
  for (int i = 0; i < state_dim(); ++i) {
    (essential[static_cast<std::size_t>(i)] ? masks.essential : masks.trivial).push_back(i);
  }
  return masks;
}

SynthRecEnv make_synthrec(const SynthRecConfig& config) { return SynthRecEnv(config); }

double click_probability(const SynthRecEnv& env, const StateVec& state,
                         const ActionVec& action) {
  return env.click_probability(state, action);
}

StateMasks ground_truth_masks(const SynthRecEnv& env) { return env.ground_truth_masks(); }

}  // namespace macs

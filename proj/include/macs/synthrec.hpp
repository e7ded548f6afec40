#pragma once

#include "macs/mdp.hpp"
#include "macs/rng.hpp"

#include <cstdint>
#include <vector>

namespace macs {

struct SynthRecConfig {
  int n_static = 88;
  int n_dynamic = 3;
  int item_dim = 27;
  int history_len = 2;
  int essential_static_count = 40;
  double drift_rate = 0.05;
  // Standard deviation of the static and dynamic click weights; zero with a
  // zero history scale gives p = 0.5 everywhere.
  double click_weight_scale = 0.1;
  // History weights are |N(0, 1)| times this scale.
  double history_weight_scale = 0.05;
  // Seeds the fixed world (click weights, drift map), not the episodes.
  std::uint64_t seed = 0;

  int state_dim() const { return n_static + n_dynamic + history_len * item_dim; }
  int essential_count() const {
    return essential_static_count + n_dynamic + item_dim;
  }
  int trivial_count() const { return state_dim() - essential_count(); }

  void validate() const;
  bool operator==(const SynthRecConfig&) const = default;
};

struct StateMasks {
  std::vector<int> essential;
  std::vector<int> trivial;
};

// Synthetic recommendation simulator with a known essential/trivial split.
//
// State layout: [static bits | dynamic interest | history slot 0 (most recent)
// | ... | history slot m-1]. A recommended item is the sign pattern of the
// action. Clicks are Bernoulli(logistic(w . phi)) where phi pairs every
// essential coordinate with one action coordinate: static and dynamic
// coordinates cycle through the action dims, history coordinate i pairs with
// action i. The static bits beyond essential_static_count are session context
// redrawn each step and never read by the click model, and older history slots
// drop out before they could be.
class SynthRecEnv final : public Environment {
 public:
  explicit SynthRecEnv(SynthRecConfig config);

  int state_dim() const override { return config_.state_dim(); }
  int action_dim() const override { return config_.item_dim; }
  RewardRange reward_range() const override { return {0.0, 1.0}; }

  StateVec reset(std::uint64_t seed) override;
  StepResult step(const ActionVec& action) override;
  std::unique_ptr<Environment> branch() const override;
  const StateVec& state() const override { return state_; }
  void force_state(const StateVec& state) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

  double click_probability(const StateVec& state, const ActionVec& action) const;
  StateMasks ground_truth_masks() const;

  const SynthRecConfig& config() const { return config_; }
  // One weight per essential coordinate, in essential-index order.
  const Eigen::VectorXd& click_weights() const { return click_weights_; }
  void set_click_weights(const Eigen::VectorXd& weights);
  // Action coordinate paired with the j-th essential coordinate.
  int paired_action(int essential_position) const;

  Eigen::Ref<const Eigen::VectorXd> user_dynamic() const {
    return state_.segment(config_.n_static, config_.n_dynamic);
  }

 private:
  int history_offset(int slot) const {
    return config_.n_static + config_.n_dynamic + slot * config_.item_dim;
  }

  SynthRecConfig config_;
  Eigen::VectorXd click_weights_;
  Eigen::MatrixXd drift_map_;  // n_dynamic x item_dim
  std::vector<int> essential_index_;
  StateVec state_;
  Rng rng_;
};

SynthRecEnv make_synthrec(const SynthRecConfig& config);
double click_probability(const SynthRecEnv& env, const StateVec& state,
                         const ActionVec& action);
StateMasks ground_truth_masks(const SynthRecEnv& env);

}  // namespace macs

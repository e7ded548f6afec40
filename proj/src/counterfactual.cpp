#include "macs/counterfactual.hpp"

#include "macs/error.hpp"

#include <cmath>
#include <fstream>

namespace macs {

std::string to_string(TrainingMode mode) {
  return mode == TrainingMode::Expert ? "expert" : "joint";
}

CounterfactualPolicy::CounterfactualPolicy(ActorCriticAgent agent, TrainingMode mode)
    : agent_(std::move(agent)), mode_(mode) {}

ActionVec CounterfactualPolicy::act(const StateVec& state, Rng& rng) const {
  return agent_.select_action(state, !frozen_, rng);
}

void CounterfactualPolicy::save_file(const std::string& path, std::uint64_t episode_count) const {
  CheckpointMeta meta;
  meta.episode_count = episode_count;
  meta.tag = "macs:" + to_string(mode_);
  agent_.save_file(path, meta);
}

CounterfactualPolicy CounterfactualPolicy::load_file(const std::string& path) {
  CheckpointMeta meta;
  ActorCriticAgent agent = ActorCriticAgent::load_file(path, AgentConfig{}, &meta);
  TrainingMode mode;
  if (meta.tag == "macs:expert") {
    mode = TrainingMode::Expert;
  } else if (meta.tag == "macs:joint") {
    mode = TrainingMode::Joint;
  } else {
    throw CorruptCheckpoint("checkpoint is not a counterfactual policy (tag '" + meta.tag + "')");
  }
  CounterfactualPolicy policy(std::move(agent), mode);
  policy.freeze();
  return policy;
}

namespace {

void require_at(const Environment& env, const StateVec& s_t) {
  if (env.state().size() != s_t.size() || env.state() != s_t) {
    throw StateMismatch("environment is not at the given state");
  }
}

}  // namespace

StateVec counterfactual_state(const Environment& env, const StateVec& s_t, const ActionVec& a_c) {
  require_at(env, s_t);
  auto branch = env.branch();
  return branch->step(a_c).next_state;
}

Counterfactual synthesize_counterfactual(const Environment& env, const StateVec& s_t,
                                         const CounterfactualPolicy& policy, Rng& rng) {
  require_at(env, s_t);
  Counterfactual cf;
  cf.action = policy.act(s_t, rng);
  cf.state = counterfactual_state(env, s_t, cf.action);
  return cf;
}

double intervened_reward(const Environment& env, const StateVec& s_c, const ActionVec& action) {
  if (s_c.size() != env.state_dim()) throw DimensionError("intervened state has the wrong length");
  auto branch = env.branch();
  branch->force_state(s_c);
  return branch->step(action).reward;
}

Transition augment_step(const Environment& env, const StateVec& s_t, const ActionVec& a_t,
                        const StateVec& s_next, const CounterfactualPolicy& policy, Rng& rng,
                        bool terminal) {
  const Counterfactual cf = synthesize_counterfactual(env, s_t, policy, rng);
  const double r_c = intervened_reward(env, cf.state, a_t);
  return Transition{cf.state, a_t, s_next, r_c, terminal};
}

Transition random_mask_augment(const Transition& transition, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mask probability must lie in [0, 1]");
  Transition out = transition;
  for (Eigen::Index i = 0; i < out.state.size(); ++i) {
    if (uniform01(rng) < p) out.state[i] = 0.0;
  }
  return out;
}

PreservationScore essential_preservation_score(const StateMasks& masks, const StateVec& s,
                                               const StateVec& s_c) {
  if (s.size() != s_c.size()) throw DimensionError("states differ in length");
  if (static_cast<Eigen::Index>(masks.essential.size() + masks.trivial.size()) != s.size()) {
    throw DimensionError("masks do not partition the state");
  }
  auto rms = [&](const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (int i : idx) {
      if (i < 0 || i >= s.size()) throw DimensionError("mask index out of range");
      const double d = s[i] - s_c[i];
      sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(idx.size()));
  };
  return {rms(masks.essential), rms(masks.trivial)};
}

}  // namespace macs

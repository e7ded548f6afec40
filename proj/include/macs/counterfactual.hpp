#pragma once

#include "macs/agent.hpp"
#include "macs/mdp.hpp"
#include "macs/rng.hpp"
#include "macs/synthrec.hpp"

#include <string>

namespace macs {

enum class TrainingMode : std::uint8_t { Expert = 0, Joint = 1 };

std::string to_string(TrainingMode mode);

// The counterfactual synthesis policy: an actor-critic agent acting in the host
// environment's action space. While unfrozen it explores; once frozen it acts
// greedily.
class CounterfactualPolicy {
 public:
  CounterfactualPolicy(ActorCriticAgent agent, TrainingMode mode);

  ActionVec act(const StateVec& state, Rng& rng) const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  TrainingMode mode() const { return mode_; }
  bool converged() const { return converged_; }
  void set_converged(bool c) { converged_ = c; }

  ActorCriticAgent& agent() { return agent_; }
  const ActorCriticAgent& agent() const { return agent_; }

  // Agent checkpoint whose metadata tag is "macs:<mode>".
  void save_file(const std::string& path, std::uint64_t episode_count = 0) const;
  static CounterfactualPolicy load_file(const std::string& path);

 private:
  ActorCriticAgent agent_;
  TrainingMode mode_;
  bool frozen_ = false;
  bool converged_ = false;
};

struct Counterfactual {
  ActionVec action;
  StateVec state;
};

// Steps a branch of env (which must currently be at s_t) with the given action
// and returns the resulting counterfactual state. env itself is untouched.
StateVec counterfactual_state(const Environment& env, const StateVec& s_t, const ActionVec& a_c);

// a_c = policy(s_t); s_c from a branch of env stepped with a_c.
Counterfactual synthesize_counterfactual(const Environment& env, const StateVec& s_t,
                                         const CounterfactualPolicy& policy, Rng& rng);

// Reward of taking `action` in a branch of env forced to s_c.
double intervened_reward(const Environment& env, const StateVec& s_c, const ActionVec& action);

// The counterfactual transition (s_c, a_t, s_next, r_c); env must be at s_t.
Transition augment_step(const Environment& env, const StateVec& s_t, const ActionVec& a_t,
                        const StateVec& s_next, const CounterfactualPolicy& policy, Rng& rng,
                        bool terminal = false);

// Copy of the transition with each state element zeroed with probability p.
Transition random_mask_augment(const Transition& transition, double p, Rng& rng);

struct PreservationScore {
  double delta_essential = 0.0;
  double delta_trivial = 0.0;
};

// RMS of (s - s_c) over the essential and over the trivial indices.
PreservationScore essential_preservation_score(const StateMasks& masks, const StateVec& s,
                                               const StateVec& s_c);

}  // namespace macs

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace macs {

using StateVec = Eigen::VectorXd;
using ActionVec = Eigen::VectorXd;

struct Transition {
  StateVec state;
  ActionVec action;
  StateVec next_state;
  double reward = 0.0;
  bool terminal = false;

  // Throws DimensionError / InvalidReward when the record breaks its invariants.
  void validate() const;
};

bool operator==(const Transition& a, const Transition& b);

struct StepResult {
  StateVec next_state;
  double reward = 0.0;
  bool terminal = false;
};

struct RewardRange {
  double lo = 0.0;
  double hi = 1.0;
};

// The environment contract. Implementations must be fully deterministic given
// the reset seed and the sequence of actions applied; all exogenous noise lives
// in generator state that branch() copies along with everything else.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual RewardRange reward_range() const = 0;

  virtual StateVec reset(std::uint64_t seed) = 0;
  virtual StepResult step(const ActionVec& action) = 0;

  // Deep copy, generator state included. Stepping the copy never touches this
  // instance. This is the do-operator: a branch with a replaced action or a
  // forced state shares the factual exogenous noise.
  virtual std::unique_ptr<Environment> branch() const = 0;

  virtual const StateVec& state() const = 0;

  // Overwrite the current state, keeping generator state. Used to evaluate
  // do(S_t := s) on a branch.
  virtual void force_state(const StateVec& state) = 0;

  // Replace the generator state, keeping the current state. A fresh-noise
  // branch is branch() followed by reseed().
  virtual void reseed(std::uint64_t seed) = 0;

  bool was_reset() const { return was_reset_; }

 protected:
  // Shared argument checks for step(): length and [-1, 1] bounds.
  void check_action(const ActionVec& action) const;
  void require_reset() const;
  bool was_reset_ = false;
};

using Policy = std::function<ActionVec(const StateVec&)>;

struct Trajectory {
  std::vector<Transition> transitions;
  std::uint64_t seed = 0;

  double total_reward() const;
  double mean_reward() const;
  bool is_chained() const;
};

// Σ_k gamma^k · rewards[k]; the first reward is undiscounted.
double discounted_return(std::span<const double> rewards, double gamma);

StateVec env_reset(Environment& env, std::uint64_t seed);
StepResult env_step(Environment& env, const ActionVec& action);
std::unique_ptr<Environment> env_branch(const Environment& env);

// Resets env with seed and rolls the policy for at most max_steps, stopping
// early on a terminal step.
Trajectory run_episode(Environment& env, const Policy& policy, int max_steps,
                       std::uint64_t seed);

bool all_finite(const Eigen::VectorXd& v);

}  // namespace macs

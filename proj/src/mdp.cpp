#include "macs/mdp.hpp"

#include "macs/error.hpp"

#include <cmath>
#include <string>

namespace macs {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void Transition::validate() const {
  if (state.size() != next_state.size()) {
    throw DimensionError("transition state/next_state dimension mismatch");
  }
  if (!std::isfinite(reward)) throw InvalidReward("non-finite reward");
}

bool operator==(const Transition& a, const Transition& b) {
  return a.state.size() == b.state.size() && a.action.size() == b.action.size() &&
         a.next_state.size() == b.next_state.size() && a.state == b.state &&
         a.action == b.action && a.next_state == b.next_state &&
         a.reward == b.reward && a.terminal == b.terminal;
}

void Environment::check_action(const ActionVec& action) const {
  if (action.size() != action_dim()) {
    throw DimensionError("action has length " + std::to_string(action.size()) +
                         ", expected " + std::to_string(action_dim()));
  }
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    if (!(action[i] >= -1.0 && action[i] <= 1.0)) {
      throw ActionBoundsError("action element " + std::to_string(i) +
                              " outside [-1, 1]");
    }
  }
}

void Environment::require_reset() const {
  if (!was_reset_) throw StateMismatch("environment used before reset");
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& t : transitions) total += t.reward;
  return total;
}

double Trajectory::mean_reward() const {
  if (transitions.empty()) return 0.0;
  return total_reward() / static_cast<double>(transitions.size());
}

bool Trajectory::is_chained() const {
  for (std::size_t k = 1; k < transitions.size(); ++k) {
    if (transitions[k - 1].next_state != transitions[k].state) return false;
  }
  return true;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("gamma must lie in [0, 1]");
  }
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw InvalidReward("non-finite reward in sequence");
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

StateVec env_reset(Environment& env, std::uint64_t seed) { return env.reset(seed); }

StepResult env_step(Environment& env, const ActionVec& action) {
  return env.step(action);
}

std::unique_ptr<Environment> env_branch(const Environment& env) {
  return env.branch();
}

Trajectory run_episode(Environment& env, const Policy& policy, int max_steps,
                       std::uint64_t seed) {
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  Trajectory traj;
  traj.seed = seed;
  StateVec state = env.reset(seed);
  for (int t = 0; t < max_steps; ++t) {
    ActionVec action = policy(state);
    StepResult out = env.step(action);
    traj.transitions.push_back(
        Transition{state, action, out.next_state, out.reward, out.terminal});
    if (out.terminal) break;
    state = std::move(out.next_state);
  }
  return traj;
}

}  // namespace macs

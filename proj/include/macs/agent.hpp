#pragma once

#include "macs/checkpoint.hpp"
#include "macs/dense_net.hpp"
#include "macs/mdp.hpp"
#include "macs/optim.hpp"
#include "macs/replay_buffer.hpp"
#include "macs/rng.hpp"

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace macs {

enum class Variant : std::uint8_t { DDPG = 0, SAC = 1, TD3 = 2 };

std::string to_string(Variant v);
// Case-insensitive; ConfigError for anything else.
Variant parse_variant(const std::string& text);

struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 64;
  int buffer_capacity = 100000;
  int hidden = 128;
  double explore_sigma = 0.1;
  double sac_alpha = 0.2;
  int policy_delay = 2;
  double target_noise = 0.2;
  double noise_clip = 0.5;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  // Uniform-random actions for the first warmup_steps environment steps.
  // Unset means on for TD3 only.
  int warmup_steps = 500;
  std::optional<bool> random_warmup;

  bool uses_random_warmup(Variant v) const {
    return random_warmup.value_or(v == Variant::TD3);
  }
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

struct UpdateStats {
  double critic_loss = 0.0;
  std::optional<double> actor_loss;
  // SAC only: batch mean of -log pi(a|s).
  std::optional<double> entropy_term;
};

// Column-per-sample view of a minibatch.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd rewards;
  Eigen::VectorXd not_done;

  static Batch from(const std::vector<Transition>& transitions);
  Eigen::Index size() const { return rewards.size(); }
};

// Tanh-squashed diagonal Gaussian used by the SAC actor.
struct SquashedGaussianSample {
  Eigen::MatrixXd action;      // tanh(u)
  Eigen::MatrixXd pre_tanh;    // u = mean + std * noise
  Eigen::MatrixXd noise;       // standard normal draws
  Eigen::MatrixXd std;
  Eigen::VectorXd log_prob;    // per sample, tanh-corrected
};

SquashedGaussianSample sample_squashed_gaussian(const Eigen::MatrixXd& mean,
                                                const Eigen::MatrixXd& log_std, Rng& rng);
// log density of the squashed distribution at `action` (each entry in (-1, 1)).
double squashed_gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                  const Eigen::VectorXd& action);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// DDPG, SAC or TD3 over dense networks. DDPG/TD3 actors end in tanh; the SAC
// actor emits [mean | log_std] and is squashed explicitly. TD3 and SAC hold two
// critics.
class ActorCriticAgent {
 public:
  ActorCriticAgent(Variant variant, int state_dim, int action_dim, AgentConfig config,
                   std::uint64_t seed);

  Variant variant() const { return variant_; }
  const AgentConfig& config() const { return config_; }
  AgentConfig& mutable_config() { return config_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  std::int64_t update_count() const { return updates_; }

  ActionVec select_action(const StateVec& state, bool explore, Rng& rng) const;
  // explore = false; never touches a generator.
  ActionVec greedy_action(const StateVec& state) const;
  Eigen::MatrixXd greedy_actions(const Eigen::MatrixXd& states) const;

  UpdateStats update(const std::vector<Transition>& batch, Rng& rng);
  UpdateStats ddpg_update(const std::vector<Transition>& batch, Rng& rng);
  UpdateStats sac_update(const std::vector<Transition>& batch, Rng& rng);
  UpdateStats td3_update(const std::vector<Transition>& batch, Rng& rng);

  // Bootstrapped critic targets y for the batch under this variant's rule.
  Eigen::VectorXd critic_targets(const Batch& batch, Rng& rng) const;

  DenseNet& actor() { return actor_; }
  const DenseNet& actor() const { return actor_; }
  DenseNet& actor_target() { return actor_target_; }
  DenseNet& critic(int i) { return critics_.at(static_cast<std::size_t>(i)); }
  const DenseNet& critic(int i) const { return critics_.at(static_cast<std::size_t>(i)); }
  DenseNet& critic_target(int i) { return critic_targets_.at(static_cast<std::size_t>(i)); }
  const DenseNet& critic_target(int i) const {
    return critic_targets_.at(static_cast<std::size_t>(i));
  }
  int critic_count() const { return static_cast<int>(critics_.size()); }
  bool has_actor_target() const { return variant_ != Variant::SAC; }

  // Concatenated parameters of every network, online then target.
  Eigen::VectorXd all_parameters() const;

  // "MACSAGNT" | u8 version | u8 variant | u32 state dim | u32 action dim |
  // u32 section count | one nn checkpoint per network (actor, actor target,
  // critics, critic targets).
  void save(std::ostream& sink, const CheckpointMeta& meta) const;
  static ActorCriticAgent load(std::istream& source, AgentConfig config = {},
                               CheckpointMeta* meta = nullptr);
  void save_file(const std::string& path, const CheckpointMeta& meta) const;
  static ActorCriticAgent load_file(const std::string& path, AgentConfig config = {},
                                    CheckpointMeta* meta = nullptr);

 private:
  void require(Variant v, const char* op) const;
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const;
  double fit_critic(int i, const Batch& b, const Eigen::VectorXd& y);
  double update_deterministic_actor(const Batch& b);
  void update_targets();

  Variant variant_;
  int state_dim_;
  int action_dim_;
  AgentConfig config_;
  DenseNet actor_;
  DenseNet actor_target_;
  std::vector<DenseNet> critics_;
  std::vector<DenseNet> critic_targets_;
  AdamState actor_opt_;
  std::vector<AdamState> critic_opts_;
  std::int64_t updates_ = 0;
};

// Agent plus replay buffer and generator: the piece a training loop drives.
// Warm-up actions are uniform; updates start once the buffer holds a batch.
class Learner {
 public:
  Learner(Variant variant, int state_dim, int action_dim, AgentConfig config,
          std::uint64_t seed);

  ActionVec act(const StateVec& state, bool explore);
  // Stores a factual transition and counts one environment step.
  void observe(Transition t);
  // Stores an extra (synthesized) transition; no step is counted.
  void store(Transition t);
  std::optional<UpdateStats> maybe_update();

  ActorCriticAgent& agent() { return agent_; }
  const ActorCriticAgent& agent() const { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t env_steps() const { return env_steps_; }

 private:
  ActorCriticAgent agent_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::int64_t env_steps_ = 0;
};

}  // namespace macs

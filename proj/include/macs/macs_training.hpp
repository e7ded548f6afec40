#pragma once

#include "macs/agent.hpp"
#include "macs/counterfactual.hpp"
#include "macs/mdp.hpp"
#include "macs/replay_buffer.hpp"
#include "macs/reward_estimator.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace macs {

struct MacsConfig {
  double eps = 0.1;
  double lambda_base = 1.0;
  // Unset thresholds follow the percentage rule in resolve_thresholds().
  std::optional<double> eps1;
  std::optional<double> eps2;
  std::optional<double> delta1;
  std::optional<double> delta2;
  int max_cf_episodes = 200;
  // Episodes averaged when comparing against eps1 / eps2.
  int average_window = 10;
  // Greedy episodes used to check an expert against eps1.
  int qualify_episodes = 10;
  EstimatorConfig estimator;
  Variant cf_variant = Variant::DDPG;
  // Discount used by the synthesis policy's own critic.
  double cf_gamma = 0.0;

  void validate() const;
  bool operator==(const MacsConfig&) const = default;
};

struct Thresholds {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

// eps1 = 50% of the maximum episode return, eps2 = 60% of the largest possible
// shaped episode return, each delta = 5% of its scale.
Thresholds resolve_thresholds(const MacsConfig& config, RewardRange range, int horizon);

struct CfTrainingReport {
  bool converged = false;
  int episodes = 0;
  std::vector<double> shaped_returns;
  std::optional<double> final_kl;
};

// Stage 2: trains the synthesis policy against a fixed expert. The policy, its
// replay buffer and generator persist across calls, so a later round resumes
// where the previous one stopped.
class CounterfactualTrainer {
 public:
  CounterfactualTrainer(int state_dim, int action_dim, const AgentConfig& agent_config,
                        const MacsConfig& config, TrainingMode mode, std::uint64_t seed);

  // Runs episodes of `horizon` steps on `env` (reset with seeds drawn from this
  // trainer's stream) until the mean shaped return of the last
  // average_window episodes reaches eps2, or max_cf_episodes elapse.
  CfTrainingReport train(const ActorCriticAgent& expert, Environment& env, double eps2,
                         int horizon);

  // Frozen copy of the current policy.
  CounterfactualPolicy snapshot() const;
  const CounterfactualPolicy& policy() const { return policy_; }
  const RewardDistEstimator& estimator() const { return estimator_; }
  std::int64_t steps() const { return steps_; }

 private:
  MacsConfig config_;
  CounterfactualPolicy policy_;
  ReplayBuffer buffer_;
  RewardDistEstimator estimator_;
  Rng rng_;
  std::uint64_t seed_;
  std::int64_t steps_ = 0;
  std::uint64_t episodes_run_ = 0;
  bool last_converged_ = false;
};

// Mean greedy episode return over `episodes` seeded episodes.
double average_greedy_return(const ActorCriticAgent& agent, const Environment& prototype,
                             int episodes, int horizon, std::uint64_t seed);

// Expert-demonstration training. Throws ExpertTooWeak when the expert's greedy
// average return is below eps1. The returned policy is frozen and flagged
// unconverged when the episode cap was hit first.
CounterfactualPolicy train_macs_expert(const ActorCriticAgent& expert, const Environment& env,
                                       const AgentConfig& agent_config, const MacsConfig& config,
                                       int horizon, std::uint64_t seed,
                                       CfTrainingReport* report = nullptr);

enum class AugmentMode { Off, Expert, Joint, RandomMask };

std::string to_string(AugmentMode mode);
AugmentMode parse_augment_mode(const std::string& text);

struct EpisodeSummary {
  int episode = 0;  // 1-based
  std::int64_t env_steps = 0;
  double train_return = 0.0;
  std::optional<double> kl;
  std::int64_t aug_count = 0;
  std::optional<double> eps1;
  std::optional<double> eps2;
  int stage2_rounds = 0;
};

struct TrainSpec {
  Variant variant = Variant::DDPG;
  AgentConfig agent;
  MacsConfig macs;
  AugmentMode mode = AugmentMode::Off;
  double mask_prob = 0.2;
  int episodes = 100;
  int max_steps = 20;
  std::uint64_t seed = 0;
};

using EpisodeCallback = std::function<void(const EpisodeSummary&, const ActorCriticAgent&)>;

struct TrainResult {
  ActorCriticAgent policy;
  std::optional<CounterfactualPolicy> counterfactual;
  std::vector<EpisodeSummary> log;
  // Factual transitions in order of occurrence, when requested.
  std::vector<Transition> factual;
};

// Recommendation-policy training with optional augmentation. Joint mode is the
// three-stage schedule; Expert mode requires a frozen synthesis policy; the
// factual trajectory never depends on the mode.
TrainResult train_recommender(const Environment& prototype, const TrainSpec& spec,
                              const std::optional<CounterfactualPolicy>& frozen_policy = {},
                              const EpisodeCallback& on_episode = {},
                              bool record_factual = false);

TrainResult joint_train(const Environment& env, Variant variant, const AgentConfig& agent_config,
                        const MacsConfig& macs_config, int episodes, int max_steps,
                        std::uint64_t seed, const EpisodeCallback& on_episode = {});

}  // namespace macs

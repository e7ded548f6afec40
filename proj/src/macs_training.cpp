#include "macs/macs_training.hpp"

#include "macs/error.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace macs {

void MacsConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("macs.eps must be positive");
  if (delta1 && !(*delta1 >= 0.0)) throw ConfigError("macs.delta1 must be non-negative");
  if (delta2 && !(*delta2 >= 0.0)) throw ConfigError("macs.delta2 must be non-negative");
  if (max_cf_episodes < 1) throw ConfigError("macs.max_cf_episodes must be positive");
  if (average_window < 1) throw ConfigError("macs.average_window must be positive");
  if (qualify_episodes < 1) throw ConfigError("macs.qualify_episodes must be positive");
  if (!(cf_gamma >= 0.0 && cf_gamma <= 1.0)) throw ConfigError("macs.cf_gamma must lie in [0, 1]");
  estimator.validate();
}

Thresholds resolve_thresholds(const MacsConfig& config, RewardRange range, int horizon) {
  const double max_return = horizon * range.hi;
  const double best_base = std::max(config.lambda_base * range.hi, config.lambda_base * range.lo);
  const double shaped_cap = horizon * (best_base + 1.0 / config.eps);
  Thresholds t;
  t.eps1 = config.eps1.value_or(0.5 * max_return);
  t.eps2 = config.eps2.value_or(0.6 * shaped_cap);
  t.delta1 = config.delta1.value_or(0.05 * max_return);
  t.delta2 = config.delta2.value_or(0.05 * shaped_cap);
  return t;
}

namespace {

AgentConfig counterfactual_agent_config(AgentConfig base, const MacsConfig& config) {
  base.gamma = config.cf_gamma;
  return base;
}

double mean_of(const std::deque<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

CounterfactualTrainer::CounterfactualTrainer(int state_dim, int action_dim,
                                             const AgentConfig& agent_config,
                                             const MacsConfig& config, TrainingMode mode,
                                             std::uint64_t seed)
    : config_(config),
      policy_(ActorCriticAgent(config.cf_variant, state_dim, action_dim,
                               counterfactual_agent_config(agent_config, config),
                               derive_seed(seed, streams::kCounterfactualInit)),
              mode),
      buffer_(static_cast<std::size_t>(agent_config.buffer_capacity)),
      estimator_(config.estimator),
      rng_(derive_seed(seed, streams::kCounterfactual)),
      seed_(seed) {
  config_.validate();
}

CfTrainingReport CounterfactualTrainer::train(const ActorCriticAgent& expert, Environment& env,
                                              double eps2, int horizon) {
  if (expert.state_dim() != env.state_dim() || expert.action_dim() != env.action_dim()) {
    throw DimensionError("expert does not match the environment");
  }
  const RewardRange range = env.reward_range();
  if (estimator_.config().lo != range.lo || estimator_.config().hi != range.hi) {
    EstimatorConfig ec = config_.estimator;
    ec.lo = range.lo;
    ec.hi = range.hi;
    estimator_ = RewardDistEstimator(ec);
  }
  // A new expert defines a new observational distribution.
  estimator_.clear();

  const auto& cf_cfg = policy_.agent().config();
  const bool random_warmup = cf_cfg.uses_random_warmup(policy_.agent().variant());
  const auto batch = static_cast<std::size_t>(cf_cfg.batch_size);

  CfTrainingReport report;
  std::deque<double> recent;
  for (int ep = 0; ep < config_.max_cf_episodes; ++ep) {
    env.reset(derive_seed(seed_, streams::kStage2Env, episodes_run_++));
    double shaped_return = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const StateVec s = env.state();
      const ActionVec a = expert.greedy_action(s);
      const auto snapshot = env.branch();
      const StepResult factual = env.step(a);
      estimator_.record(Window::Observational, factual.reward);

      ActionVec a_c;
      if (random_warmup && steps_ < cf_cfg.warmup_steps) {
        a_c.resize(env.action_dim());
        for (Eigen::Index i = 0; i < a_c.size(); ++i) a_c[i] = 2.0 * uniform01(rng_) - 1.0;
      } else {
        a_c = policy_.act(s, rng_);
      }
      const StateVec s_c = counterfactual_state(*snapshot, s, a_c);
      const double r_i = intervened_reward(*snapshot, s_c, a);
      estimator_.record(Window::Intervened, r_i);

      const auto kl = estimator_.kl();
      const double r = kl ? shaped_reward(r_i, *kl, config_.eps, config_.lambda_base)
                          : config_.lambda_base * r_i;
      buffer_.push(Transition{s, a_c, s_c, r, factual.terminal});
      ++steps_;
      if (buffer_.size() >= batch) policy_.agent().update(buffer_.sample(batch, rng_), rng_);
      shaped_return += r;
      if (factual.terminal) break;
    }
    report.shaped_returns.push_back(shaped_return);
    report.episodes = ep + 1;
    recent.push_back(shaped_return);
    if (static_cast<int>(recent.size()) > config_.average_window) recent.pop_front();
    if (static_cast<int>(recent.size()) == config_.average_window && mean_of(recent) >= eps2) {
      report.converged = true;
      break;
    }
  }
  report.final_kl = estimator_.kl();
  last_converged_ = report.converged;
  return report;
}

CounterfactualPolicy CounterfactualTrainer::snapshot() const {
  CounterfactualPolicy frozen = policy_;
  frozen.freeze();
  frozen.set_converged(last_converged_);
  return frozen;
}

double average_greedy_return(const ActorCriticAgent& agent, const Environment& prototype,
                             int episodes, int horizon, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("need at least one episode");
  double total = 0.0;
  const Policy greedy = [&agent](const StateVec& s) { return agent.greedy_action(s); };
  for (int e = 0; e < episodes; ++e) {
    auto env = prototype.branch();
    total += run_episode(*env, greedy, horizon,
                         derive_seed(seed, streams::kEvaluation, static_cast<std::uint64_t>(e)))
                 .total_reward();
  }
  return total / episodes;
}

CounterfactualPolicy train_macs_expert(const ActorCriticAgent& expert, const Environment& env,
                                       const AgentConfig& agent_config, const MacsConfig& config,
                                       int horizon, std::uint64_t seed, CfTrainingReport* report) {
  config.validate();
  const Thresholds th = resolve_thresholds(config, env.reward_range(), horizon);
  const double qualification =
      average_greedy_return(expert, env, config.qualify_episodes, horizon, derive_seed(seed, 0xe1));
  if (qualification < th.eps1) {
    throw ExpertTooWeak("expert averages " + std::to_string(qualification) +
                        " per episode, below eps1 = " + std::to_string(th.eps1));
  }
  CounterfactualTrainer trainer(env.state_dim(), env.action_dim(), agent_config, config,
                                TrainingMode::Expert, seed);
  auto work = env.branch();
  CfTrainingReport rep = trainer.train(expert, *work, th.eps2, horizon);
  if (report) *report = rep;
  return trainer.snapshot();
}

std::string to_string(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::Off: return "off";
    case AugmentMode::Expert: return "expert";
    case AugmentMode::Joint: return "joint";
    case AugmentMode::RandomMask: return "random-mask";
  }
  return "?";
}

AugmentMode parse_augment_mode(const std::string& text) {
  if (text == "off") return AugmentMode::Off;
  if (text == "expert") return AugmentMode::Expert;
  if (text == "joint") return AugmentMode::Joint;
  if (text == "random-mask") return AugmentMode::RandomMask;
  throw ConfigError("unknown macs.mode '" + text + "' (expected off, expert, joint, random-mask)");
}

TrainResult train_recommender(const Environment& prototype, const TrainSpec& spec,
                              const std::optional<CounterfactualPolicy>& frozen_policy,
                              const EpisodeCallback& on_episode, bool record_factual) {
  spec.macs.validate();
  if (spec.episodes < 0 || spec.max_steps < 0) throw ConfigError("negative schedule length");
  if (spec.mode == AugmentMode::Expert && !frozen_policy) {
    throw ConfigError("expert mode needs a trained counterfactual policy");
  }
  const int sd = prototype.state_dim();
  const int ad = prototype.action_dim();
  auto env = prototype.branch();
  Learner learner(spec.variant, sd, ad, spec.agent, spec.seed);
  Rng cf_rng(derive_seed(spec.seed, streams::kCounterfactual, 1));
  Rng mask_rng(derive_seed(spec.seed, streams::kMask));

  std::optional<CounterfactualPolicy> cf;
  if (spec.mode == AugmentMode::Expert) {
    cf = *frozen_policy;
    cf->freeze();
  }
  std::unique_ptr<CounterfactualTrainer> cf_trainer;
  std::unique_ptr<Environment> stage2_env;
  Thresholds th = resolve_thresholds(spec.macs, prototype.reward_range(), spec.max_steps);
  if (spec.mode == AugmentMode::Joint) {
    cf_trainer = std::make_unique<CounterfactualTrainer>(sd, ad, spec.agent, spec.macs,
                                                         TrainingMode::Joint, spec.seed);
    stage2_env = prototype.branch();
  }

  TrainResult result{learner.agent(), std::nullopt, {}, {}};
  std::deque<double> recent;
  std::int64_t aug_count = 0;
  int stage2_rounds = 0;
  std::optional<double> last_kl;

  for (int ep = 0; ep < spec.episodes; ++ep) {
    env->reset(derive_seed(spec.seed, streams::kEnvEpisode, static_cast<std::uint64_t>(ep)));
    double episode_return = 0.0;
    for (int t = 0; t < spec.max_steps; ++t) {
      const StateVec s = env->state();
      const ActionVec a = learner.act(s, true);
      std::unique_ptr<Environment> snapshot;
      if (cf) snapshot = env->branch();
      const StepResult out = env->step(a);
      Transition factual{s, a, out.next_state, out.reward, out.terminal};
      if (record_factual) result.factual.push_back(factual);
      if (cf) {
        learner.store(augment_step(*snapshot, s, a, out.next_state, *cf, cf_rng, out.terminal));
        ++aug_count;
      } else if (spec.mode == AugmentMode::RandomMask) {
        learner.store(random_mask_augment(factual, spec.mask_prob, mask_rng));
        ++aug_count;
      }
      learner.observe(std::move(factual));
      learner.maybe_update();
      episode_return += out.reward;
      if (out.terminal) break;
    }

    recent.push_back(episode_return);
    if (static_cast<int>(recent.size()) > spec.macs.average_window) recent.pop_front();

    if (spec.mode == AugmentMode::Joint &&
        static_cast<int>(recent.size()) == spec.macs.average_window && mean_of(recent) > th.eps1) {
      const ActorCriticAgent expert = learner.agent();
      const CfTrainingReport rep = cf_trainer->train(expert, *stage2_env, th.eps2, spec.max_steps);
      cf = cf_trainer->snapshot();
      last_kl = rep.final_kl;
      th.eps1 += th.delta1;
      th.eps2 += th.delta2;
      ++stage2_rounds;
    }

    EpisodeSummary summary;
    summary.episode = ep + 1;
    summary.env_steps = learner.env_steps();
    summary.train_return = episode_return;
    summary.kl = last_kl;
    summary.aug_count = aug_count;
    if (spec.mode == AugmentMode::Joint) {
      summary.eps1 = th.eps1;
      summary.eps2 = th.eps2;
    }
    summary.stage2_rounds = stage2_rounds;
    result.log.push_back(summary);
    if (on_episode) on_episode(summary, learner.agent());
  }
  result.policy = learner.agent();
  result.counterfactual = cf;
  return result;
}

TrainResult joint_train(const Environment& env, Variant variant, const AgentConfig& agent_config,
                        const MacsConfig& macs_config, int episodes, int max_steps,
                        std::uint64_t seed, const EpisodeCallback& on_episode) {
  TrainSpec spec;
  spec.variant = variant;
  spec.agent = agent_config;
  spec.macs = macs_config;
  spec.mode = AugmentMode::Joint;
  spec.episodes = episodes;
  spec.max_steps = max_steps;
  spec.seed = seed;
  return train_recommender(env, spec, std::nullopt, on_episode);
}

}  // namespace macs

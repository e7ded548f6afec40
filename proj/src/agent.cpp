#include "macs/agent.hpp"

#include "macs/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace macs {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

constexpr double kHalfLog2Pi = 0.91893853320467274178;

DenseNet make_actor(Variant v, int sd, int ad, int hidden, std::uint64_t seed) {
  if (v == Variant::SAC) {
    return DenseNet({sd, hidden, hidden, 2 * ad}, OutputActivation::Identity, seed);
  }
  return DenseNet({sd, hidden, hidden, ad}, OutputActivation::Tanh, seed);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::DDPG: return "DDPG";
    case Variant::SAC: return "SAC";
    case Variant::TD3: return "TD3";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "DDPG") return Variant::DDPG;
  if (upper == "SAC") return Variant::SAC;
  if (upper == "TD3") return Variant::TD3;
  throw ConfigError("unsupported agent variant '" + text + "' (expected DDPG, SAC or TD3)");
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent.gamma must lie in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("agent.tau must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("agent.batch_size must be positive");
  if (buffer_capacity < 1) throw ConfigError("agent.buffer_capacity must be positive");
  if (batch_size > buffer_capacity) throw ConfigError("agent.batch_size exceeds buffer capacity");
  if (hidden < 1) throw ConfigError("agent.hidden must be positive");
  if (!(explore_sigma >= 0.0)) throw ConfigError("agent.explore_sigma must be non-negative");
  if (!(sac_alpha >= 0.0)) throw ConfigError("agent.sac_alpha must be non-negative");
  if (policy_delay < 1) throw ConfigError("agent.policy_delay must be at least 1");
  if (!(target_noise >= 0.0) || !(noise_clip >= 0.0)) {
    throw ConfigError("agent.target_noise and agent.noise_clip must be non-negative");
  }
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (warmup_steps < 0) throw ConfigError("agent.warmup_steps must be non-negative");
}

Batch Batch::from(const std::vector<Transition>& ts) {
  if (ts.empty()) throw InsufficientData("empty minibatch");
  const auto n = static_cast<Eigen::Index>(ts.size());
  Batch b;
  b.states.resize(ts[0].state.size(), n);
  b.actions.resize(ts[0].action.size(), n);
  b.next_states.resize(ts[0].next_state.size(), n);
  b.rewards.resize(n);
  b.not_done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = ts[static_cast<std::size_t>(j)];
    b.states.col(j) = t.state;
    b.actions.col(j) = t.action;
    b.next_states.col(j) = t.next_state;
    b.rewards[j] = t.reward;
    b.not_done[j] = t.terminal ? 0.0 : 1.0;
  }
  return b;
}

SquashedGaussianSample sample_squashed_gaussian(const Eigen::MatrixXd& mean,
                                                const Eigen::MatrixXd& log_std, Rng& rng) {
  SquashedGaussianSample s;
  s.noise.resize(mean.rows(), mean.cols());
  for (Eigen::Index j = 0; j < mean.cols(); ++j)
    for (Eigen::Index i = 0; i < mean.rows(); ++i) s.noise(i, j) = standard_normal(rng);
  s.std = log_std.array().exp().matrix();
  s.pre_tanh = mean + s.std.cwiseProduct(s.noise);
  s.action = s.pre_tanh.array().tanh().matrix();
  s.log_prob.resize(mean.cols());
  for (Eigen::Index j = 0; j < mean.cols(); ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      lp += -0.5 * s.noise(i, j) * s.noise(i, j) - log_std(i, j) - kHalfLog2Pi -
            log_one_minus_tanh_sq(s.pre_tanh(i, j));
    }
    s.log_prob[j] = lp;
  }
  return s;
}

double squashed_gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                  const Eigen::VectorXd& action) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double u = std::atanh(action[i]);
    const double z = (u - mean[i]) / std::exp(log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi - log_one_minus_tanh_sq(u);
  }
  return lp;
}

ActorCriticAgent::ActorCriticAgent(Variant variant, int state_dim, int action_dim,
                                   AgentConfig config, std::uint64_t seed)
    : variant_(variant), state_dim_(state_dim), action_dim_(action_dim), config_(config) {
  config_.validate();
  if (state_dim < 1 || action_dim < 1) throw ConfigError("agent dimensions must be positive");
  const int h = config_.hidden;
  actor_ = make_actor(variant, state_dim, action_dim, h, derive_seed(seed, 11));
  actor_target_ = actor_;
  const int n_critics = variant == Variant::DDPG ? 1 : 2;
  for (int i = 0; i < n_critics; ++i) {
    critics_.emplace_back(std::vector<int>{state_dim + action_dim, h, h, 1},
                          OutputActivation::Identity, derive_seed(seed, 21, static_cast<std::uint64_t>(i)));
  }
  critic_targets_ = critics_;
  actor_opt_ = AdamState(actor_.parameter_count(), AdamConfig{config_.actor_lr});
  for (const auto& c : critics_) {
    critic_opts_.emplace_back(c.parameter_count(), AdamConfig{config_.critic_lr});
  }
}

void ActorCriticAgent::require(Variant v, const char* op) const {
  if (variant_ != v) {
    throw ConfigError(std::string(op) + " called on a " + to_string(variant_) + " agent");
  }
}

Eigen::MatrixXd ActorCriticAgent::critic_input(const Eigen::MatrixXd& s,
                                               const Eigen::MatrixXd& a) const {
  Eigen::MatrixXd x(state_dim_ + action_dim_, s.cols());
  x.topRows(state_dim_) = s;
  x.bottomRows(action_dim_) = a;
  return x;
}

ActionVec ActorCriticAgent::greedy_action(const StateVec& state) const {
  if (state.size() != state_dim_) throw DimensionError("state has the wrong length for this agent");
  Eigen::VectorXd out = actor_.forward(state);
  if (variant_ == Variant::SAC) return out.head(action_dim_).array().tanh().matrix();
  return out;
}

Eigen::MatrixXd ActorCriticAgent::greedy_actions(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd out = actor_.forward_batch(states);
  if (variant_ == Variant::SAC) return out.topRows(action_dim_).array().tanh().matrix();
  return out;
}

ActionVec ActorCriticAgent::select_action(const StateVec& state, bool explore, Rng& rng) const {
  if (!explore) return greedy_action(state);
  if (state.size() != state_dim_) throw DimensionError("state has the wrong length for this agent");
  Eigen::VectorXd out = actor_.forward(state);
  if (variant_ == Variant::SAC) {
    Eigen::MatrixXd mean = out.head(action_dim_);
    Eigen::MatrixXd log_std = out.tail(action_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    return sample_squashed_gaussian(mean, log_std, rng).action.col(0);
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(out[i] + config_.explore_sigma * standard_normal(rng), -1.0, 1.0);
  }
  return out;
}

Eigen::VectorXd ActorCriticAgent::critic_targets(const Batch& b, Rng& rng) const {
  const Eigen::Index n = b.size();
  Eigen::VectorXd next_value(n);
  switch (variant_) {
    case Variant::DDPG: {
      const Eigen::MatrixXd a2 = actor_target_.forward_batch(b.next_states);
      next_value = critic_targets_[0].forward_batch(critic_input(b.next_states, a2)).row(0).transpose();
      break;
    }
    case Variant::TD3: {
      Eigen::MatrixXd a2 = actor_target_.forward_batch(b.next_states);
      for (Eigen::Index j = 0; j < a2.cols(); ++j) {
        for (Eigen::Index i = 0; i < a2.rows(); ++i) {
          const double eps = std::clamp(config_.target_noise * standard_normal(rng),
                                        -config_.noise_clip, config_.noise_clip);
          a2(i, j) = std::clamp(a2(i, j) + eps, -1.0, 1.0);
        }
      }
      const Eigen::MatrixXd x = critic_input(b.next_states, a2);
      next_value = critic_targets_[0].forward_batch(x).row(0).transpose().cwiseMin(
          critic_targets_[1].forward_batch(x).row(0).transpose());
      break;
    }
    case Variant::SAC: {
      const Eigen::MatrixXd out = actor_.forward_batch(b.next_states);
      const Eigen::MatrixXd log_std =
          out.bottomRows(action_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
      const auto s = sample_squashed_gaussian(out.topRows(action_dim_), log_std, rng);
      const Eigen::MatrixXd x = critic_input(b.next_states, s.action);
      next_value = critic_targets_[0].forward_batch(x).row(0).transpose().cwiseMin(
          critic_targets_[1].forward_batch(x).row(0).transpose());
      if (config_.sac_alpha != 0.0) next_value -= config_.sac_alpha * s.log_prob;
      break;
    }
  }
  return b.rewards + config_.gamma * b.not_done.cwiseProduct(next_value);
}

double ActorCriticAgent::fit_critic(int i, const Batch& b, const Eigen::VectorXd& y) {
  auto& net = critics_[static_cast<std::size_t>(i)];
  DenseNet::Tape tape;
  const Eigen::MatrixXd q = net.forward_batch(critic_input(b.states, b.actions), &tape);
  const Eigen::RowVectorXd err = q.row(0) - y.transpose();
  const double n = static_cast<double>(b.size());
  const Eigen::MatrixXd grad_out = (2.0 / n) * err;
  const auto g = net.backward(tape, grad_out);
  adam_step(net.parameters(), g.params, critic_opts_[static_cast<std::size_t>(i)]);
  return err.squaredNorm() / n;
}

// Deterministic policy gradient through critic 0 (DDPG, TD3).
double ActorCriticAgent::update_deterministic_actor(const Batch& b) {
  DenseNet::Tape actor_tape;
  const Eigen::MatrixXd a = actor_.forward_batch(b.states, &actor_tape);
  DenseNet::Tape critic_tape;
  const Eigen::MatrixXd q = critics_[0].forward_batch(critic_input(b.states, a), &critic_tape);
  const double n = static_cast<double>(b.size());
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, b.size(), -1.0 / n);
  const auto cg = critics_[0].backward(critic_tape, dq);
  const auto ag = actor_.backward(actor_tape, cg.input.bottomRows(action_dim_));
  adam_step(actor_.parameters(), ag.params, actor_opt_);
  return -q.mean();
}

void ActorCriticAgent::update_targets() {
  if (has_actor_target()) polyak_update(actor_target_.parameters(), actor_.parameters(), config_.tau);
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    polyak_update(critic_targets_[i].parameters(), critics_[i].parameters(), config_.tau);
  }
}

UpdateStats ActorCriticAgent::update(const std::vector<Transition>& batch, Rng& rng) {
  switch (variant_) {
    case Variant::DDPG: return ddpg_update(batch, rng);
    case Variant::SAC: return sac_update(batch, rng);
    case Variant::TD3: return td3_update(batch, rng);
  }
  return {};
}

UpdateStats ActorCriticAgent::ddpg_update(const std::vector<Transition>& batch, Rng& rng) {
  require(Variant::DDPG, "ddpg_update");
  const Batch b = Batch::from(batch);
  ++updates_;
  UpdateStats stats;
  const Eigen::VectorXd y = critic_targets(b, rng);
  stats.critic_loss = fit_critic(0, b, y);
  stats.actor_loss = update_deterministic_actor(b);
  update_targets();
  return stats;
}

UpdateStats ActorCriticAgent::td3_update(const std::vector<Transition>& batch, Rng& rng) {
  require(Variant::TD3, "td3_update");
  const Batch b = Batch::from(batch);
  ++updates_;
  UpdateStats stats;
  const Eigen::VectorXd y = critic_targets(b, rng);
  stats.critic_loss = 0.5 * (fit_critic(0, b, y) + fit_critic(1, b, y));
  if (updates_ % config_.policy_delay == 0) {
    stats.actor_loss = update_deterministic_actor(b);
    update_targets();
  }
  return stats;
}

UpdateStats ActorCriticAgent::sac_update(const std::vector<Transition>& batch, Rng& rng) {
  require(Variant::SAC, "sac_update");
  const Batch b = Batch::from(batch);
  ++updates_;
  UpdateStats stats;
  const Eigen::VectorXd y = critic_targets(b, rng);
  stats.critic_loss = 0.5 * (fit_critic(0, b, y) + fit_critic(1, b, y));

  // Reparameterized actor step on E[alpha * log pi(a|s) - min_k Q_k(s, a)].
  const int ad = action_dim_;
  const double n = static_cast<double>(b.size());
  const double alpha = config_.sac_alpha;
  DenseNet::Tape actor_tape;
  const Eigen::MatrixXd out = actor_.forward_batch(b.states, &actor_tape);
  const Eigen::MatrixXd raw_log_std = out.bottomRows(ad);
  const Eigen::MatrixXd log_std = raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  const auto s = sample_squashed_gaussian(out.topRows(ad), log_std, rng);

  const Eigen::MatrixXd x = critic_input(b.states, s.action);
  DenseNet::Tape t0, t1;
  const Eigen::RowVectorXd q0 = critics_[0].forward_batch(x, &t0).row(0);
  const Eigen::RowVectorXd q1 = critics_[1].forward_batch(x, &t1).row(0);
  Eigen::MatrixXd pick0 = Eigen::MatrixXd::Zero(1, b.size());
  Eigen::MatrixXd pick1 = Eigen::MatrixXd::Zero(1, b.size());
  double q_min_sum = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (q0[j] <= q1[j]) {
      pick0(0, j) = 1.0;
      q_min_sum += q0[j];
    } else {
      pick1(0, j) = 1.0;
      q_min_sum += q1[j];
    }
  }
  // dQmin/da per sample.
  const Eigen::MatrixXd dq_da = critics_[0].backward(t0, pick0).input.bottomRows(ad) +
                                critics_[1].backward(t1, pick1).input.bottomRows(ad);

  Eigen::MatrixXd grad_out(2 * ad, b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (int i = 0; i < ad; ++i) {
      const double a = s.action(i, j);
      const double sigma_eps = s.std(i, j) * s.noise(i, j);
      const double dq_du = dq_da(i, j) * (1.0 - a * a);
      grad_out(i, j) = (alpha * 2.0 * a - dq_du) / n;
      const bool clamped = raw_log_std(i, j) < kLogStdMin || raw_log_std(i, j) > kLogStdMax;
      grad_out(ad + i, j) =
          clamped ? 0.0 : (alpha * (-1.0 + 2.0 * a * sigma_eps) - dq_du * sigma_eps) / n;
    }
  }
  const auto ag = actor_.backward(actor_tape, grad_out);
  adam_step(actor_.parameters(), ag.params, actor_opt_);
  stats.actor_loss = (alpha * s.log_prob.sum() - q_min_sum) / n;
  stats.entropy_term = -s.log_prob.mean();

  for (std::size_t i = 0; i < critics_.size(); ++i) {
    polyak_update(critic_targets_[i].parameters(), critics_[i].parameters(), config_.tau);
  }
  return stats;
}

Eigen::VectorXd ActorCriticAgent::all_parameters() const {
  std::vector<const DenseNet*> nets{&actor_};
  if (has_actor_target()) nets.push_back(&actor_target_);
  for (const auto& c : critics_) nets.push_back(&c);
  for (const auto& c : critic_targets_) nets.push_back(&c);
  Eigen::Index total = 0;
  for (const auto* n : nets) total += n->parameter_count();
  Eigen::VectorXd all(total);
  Eigen::Index at = 0;
  for (const auto* n : nets) {
    all.segment(at, n->parameter_count()) = n->parameters();
    at += n->parameter_count();
  }
  return all;
}

namespace {
constexpr char kAgentMagic[8] = {'M', 'A', 'C', 'S', 'A', 'G', 'N', 'T'};
constexpr std::uint8_t kAgentVersion = 1;
}  // namespace

void ActorCriticAgent::save(std::ostream& sink, const CheckpointMeta& meta) const {
  sink.write(kAgentMagic, sizeof(kAgentMagic));
  binio::write_u8(sink, kAgentVersion);
  binio::write_u8(sink, static_cast<std::uint8_t>(variant_));
  binio::write_u32(sink, static_cast<std::uint32_t>(state_dim_));
  binio::write_u32(sink, static_cast<std::uint32_t>(action_dim_));
  std::vector<const DenseNet*> nets{&actor_};
  if (has_actor_target()) nets.push_back(&actor_target_);
  for (const auto& c : critics_) nets.push_back(&c);
  for (const auto& c : critic_targets_) nets.push_back(&c);
  binio::write_u32(sink, static_cast<std::uint32_t>(nets.size()));
  for (const auto* n : nets) save_checkpoint(*n, meta, sink);
}

ActorCriticAgent ActorCriticAgent::load(std::istream& source, AgentConfig config,
                                        CheckpointMeta* meta) {
  char magic[8];
  source.read(magic, sizeof(magic));
  if (source.gcount() != 8 || std::memcmp(magic, kAgentMagic, 8) != 0) {
    throw CorruptCheckpoint("bad agent checkpoint magic");
  }
  const std::uint8_t version = binio::read_u8(source);
  if (version != kAgentVersion) throw VersionError("unsupported agent checkpoint version");
  const std::uint8_t v = binio::read_u8(source);
  if (v > 2) throw CorruptCheckpoint("unknown agent variant");
  const auto variant = static_cast<Variant>(v);
  const auto sd = static_cast<int>(binio::read_u32(source));
  const auto ad = static_cast<int>(binio::read_u32(source));
  const std::uint32_t sections = binio::read_u32(source);
  const std::uint32_t expected = variant == Variant::DDPG ? 4u : variant == Variant::TD3 ? 6u : 5u;
  if (sections != expected) throw CorruptCheckpoint("agent checkpoint has the wrong section count");
  std::vector<DenseNet> nets;
  for (std::uint32_t i = 0; i < sections; ++i) nets.push_back(load_checkpoint(source, meta));
  const int hidden = nets[0].layer_sizes().size() > 2 ? nets[0].layer_sizes()[1] : config.hidden;
  config.hidden = hidden;
  ActorCriticAgent agent(variant, sd, ad, config, 0);
  std::size_t k = 0;
  auto assign = [&](DenseNet& dst) {
    if (nets[k].layer_sizes() != dst.layer_sizes() ||
        nets[k].output_activation() != dst.output_activation()) {
      throw CorruptCheckpoint("agent checkpoint network shape mismatch");
    }
    dst = std::move(nets[k++]);
  };
  assign(agent.actor_);
  if (agent.has_actor_target()) assign(agent.actor_target_);
  for (auto& c : agent.critics_) assign(c);
  for (auto& c : agent.critic_targets_) assign(c);
  return agent;
}

void ActorCriticAgent::save_file(const std::string& path, const CheckpointMeta& meta) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open agent checkpoint for writing: " + path);
  save(out, meta);
}

ActorCriticAgent ActorCriticAgent::load_file(const std::string& path, AgentConfig config,
                                             CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open checkpoint: " + path);
  return load(in, config, meta);
}

Learner::Learner(Variant variant, int state_dim, int action_dim, AgentConfig config,
                 std::uint64_t seed)
    : agent_(variant, state_dim, action_dim, config, derive_seed(seed, streams::kAgentInit)),
      buffer_(static_cast<std::size_t>(config.buffer_capacity)),
      rng_(derive_seed(seed, streams::kAgent)) {}

ActionVec Learner::act(const StateVec& state, bool explore) {
  const auto& cfg = agent_.config();
  if (explore && cfg.uses_random_warmup(agent_.variant()) && env_steps_ < cfg.warmup_steps) {
    ActionVec a(agent_.action_dim());
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = 2.0 * uniform01(rng_) - 1.0;
    return a;
  }
  return agent_.select_action(state, explore, rng_);
}

void Learner::observe(Transition t) {
  buffer_.push(std::move(t));
  ++env_steps_;
}

void Learner::store(Transition t) { buffer_.push(std::move(t)); }

std::optional<UpdateStats> Learner::maybe_update() {
  const auto n = static_cast<std::size_t>(agent_.config().batch_size);
  if (buffer_.size() < n) return std::nullopt;
  return agent_.update(buffer_.sample(n, rng_), rng_);
}

}  // namespace macs

#include <doctest.h>

#include "macs/counterfactual.hpp"
#include "macs/error.hpp"
#include "macs/replay_buffer.hpp"
#include "macs/reward_estimator.hpp"
#include "macs/synthrec.hpp"

#include <cmath>
#include <limits>

using namespace macs;

namespace {

Transition tr(double tag, int sd = 2, int ad = 1) {
  return {StateVec::Constant(sd, tag), ActionVec::Constant(ad, 0.0), StateVec::Constant(sd, tag),
          tag, false};
}

SynthRecConfig small_world() {
  SynthRecConfig c;
  c.n_static = 6;
  c.essential_static_count = 3;
  c.n_dynamic = 2;
  c.item_dim = 4;
  c.history_len = 2;
  c.click_weight_scale = 1.0;
  c.history_weight_scale = 0.5;
  c.seed = 3;
  return c;
}

// Frozen policy whose greedy action is the constant tanh(bias).
CounterfactualPolicy constant_policy(int sd, int ad, double bias) {
  AgentConfig c;
  c.hidden = 4;
  ActorCriticAgent agent(Variant::DDPG, sd, ad, c, 1);
  auto& p = agent.actor().parameters();
  p.tail(4 * ad + ad).setZero();
  p.tail(ad).setConstant(bias);
  CounterfactualPolicy policy(agent, TrainingMode::Expert);
  policy.freeze();
  return policy;
}

}  // namespace

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buf(2);
  buf.push(tr(1));
  buf.push(tr(2));
  buf.push(tr(3));
  CHECK(buf.size() == 2);
  CHECK(buf.at(0).reward == 2);
  CHECK(buf.at(1).reward == 3);
  for (int i = 4; i < 50; ++i) {
    buf.push(tr(i));
    CHECK(buf.size() <= buf.capacity());
  }
  CHECK(buf.at(0).reward == 48);
}

TEST_CASE("replay buffer rejects mismatched transitions") {
  ReplayBuffer buf(4);
  buf.push(tr(1));
  CHECK_THROWS_AS(buf.push(tr(2, 3)), DimensionError);
  CHECK_THROWS_AS(buf.push(tr(2, 2, 2)), DimensionError);
  CHECK(buf.size() == 1);
  CHECK(buf.at(0) == tr(1));
}

TEST_CASE("replay buffer sampling") {
  ReplayBuffer buf(10);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample(1, rng), InsufficientData);
  buf.push(tr(0));
  const auto one = buf.sample(1, rng);
  CHECK(one.size() == 1);
  CHECK(one[0] == tr(0));
  CHECK_THROWS_AS(buf.sample(2, rng), InsufficientData);

  for (int i = 1; i < 10; ++i) buf.push(tr(i));
  Rng a(5), b(5);
  const auto s1 = buf.sample(10, a);
  const auto s2 = buf.sample(10, b);
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i] == s2[i]);

  // Chi-square goodness of fit, 9 degrees of freedom, critical value at 0.01.
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int k = 0; k < draws / 10; ++k) {
    for (const auto& t : buf.sample(10, rng)) counts[static_cast<std::size_t>(t.reward)]++;
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  CHECK(chi2 < 21.666);
}

TEST_CASE("histogram smoothing") {
  EstimatorConfig c;
  c.bin_count = 4;
  c.smoothing = 0.0;
  RewardDistEstimator est(c);
  CHECK_THROWS_AS(estimate_hist(est, Window::Observational), InsufficientData);
  for (int i = 0; i < 5; ++i) est.record(Window::Observational, 0.6);
  const Eigen::VectorXd h = estimate_hist(est, Window::Observational);
  CHECK(h == Eigen::Vector4d(0, 0, 1, 0));

  c.smoothing = 0.5;
  RewardDistEstimator smooth(c);
  smooth.record(Window::Intervened, -3.0);  // clamps into the first bin
  smooth.record(Window::Intervened, 9.0);   // and the last
  smooth.record(Window::Intervened, 0.3);
  const Eigen::VectorXd s = estimate_hist(smooth, Window::Intervened);
  CHECK(s.minCoeff() > 0.0);
  CHECK(std::abs(s.sum() - 1.0) < 1e-12);
  CHECK(s[0] == doctest::Approx(1.5 / 5.0));
  CHECK(s[1] == doctest::Approx(1.5 / 5.0));
  CHECK(s[3] == doctest::Approx(1.5 / 5.0));
  CHECK_THROWS_AS(smooth.record(Window::Intervened, std::nan("")), InvalidReward);
}

TEST_CASE("uniform samples give a flat histogram") {
  EstimatorConfig c;
  c.lo = -2.0;
  c.hi = 3.0;
  c.window = 10000;
  RewardDistEstimator est(c);
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) est.record(Window::Observational, -2.0 + 5.0 * uniform01(rng));
  const Eigen::VectorXd h = estimate_hist(est, Window::Observational);
  CHECK((h.array() - 1.0 / 20.0).abs().maxCoeff() <= 0.01);
}

TEST_CASE("windows slide") {
  EstimatorConfig c;
  c.window = 3;
  c.warm_up = 2;
  RewardDistEstimator est(c);
  for (int i = 0; i < 5; ++i) est.record(Window::Observational, 0.1);
  CHECK(est.size(Window::Observational) == 3);
  CHECK_FALSE(est.warmed_up());
  CHECK_FALSE(est.kl().has_value());
  est.record(Window::Intervened, 0.1);
  est.record(Window::Intervened, 0.1);
  REQUIRE(est.kl().has_value());
  CHECK(*est.kl() > 0.0);  // same bin, different smoothing weight
  est.record(Window::Intervened, 0.1);
  REQUIRE(est.kl().has_value());
  CHECK(*est.kl() == 0.0);
}

TEST_CASE("KL divergence examples") {
  const Eigen::Vector2d p(0.5, 0.5), q(0.9, 0.1);
  const double pq = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  const double qp = 0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5);
  CHECK(kl_divergence(p, q) == doctest::Approx(pq).epsilon(1e-14));
  CHECK(kl_divergence(q, p) == doctest::Approx(qp).epsilon(1e-14));
  CHECK(pq == doctest::Approx(0.5108).epsilon(1e-4));
  CHECK(qp == doctest::Approx(0.3681).epsilon(1e-4));
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(kl_divergence(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(0.3, 0.7)) ==
        doctest::Approx(std::log(1.0 / 0.7)));
  CHECK_THROWS_AS(kl_divergence(p, Eigen::Vector3d(0.2, 0.3, 0.5)), DimensionError);
  CHECK_THROWS_AS(kl_divergence(p, Eigen::Vector2d(1.0, 0.0)), SupportError);
}

TEST_CASE("KL is non-negative and zero only on equal inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd p(6), q(6);
    for (int i = 0; i < 6; ++i) {
      p[i] = uniform01(rng) + 1e-3;
      q[i] = uniform01(rng) + 1e-3;
    }
    p /= p.sum();
    q /= q.sum();
    CHECK(kl_divergence(p, q) > 0.0);
    CHECK(kl_divergence(p, p) == 0.0);
    // Gibbs: cross-entropy >= entropy.
    double cross = 0.0, ent = 0.0;
    for (int i = 0; i < 6; ++i) {
      cross -= p[i] * std::log(q[i]);
      ent -= p[i] * std::log(p[i]);
    }
    CHECK(cross - ent >= -1e-12);
  }
}

TEST_CASE("estimator recovers a two-bin KL") {
  EstimatorConfig c;
  c.bin_count = 2;
  c.window = 10000;
  RewardDistEstimator est(c);
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    est.record(Window::Intervened, uniform01(rng) < 0.5 ? 0.0 : 1.0);
    est.record(Window::Observational, uniform01(rng) < 0.9 ? 0.0 : 1.0);
  }
  REQUIRE(est.kl().has_value());
  CHECK(std::abs(*est.kl() - 0.5108) <= 0.05);
}

TEST_CASE("shaped reward") {
  CHECK(shaped_reward(1.0, 0.0, 0.1, 1.0) == doctest::Approx(11.0));
  CHECK(shaped_reward(1.0, 0.9, 0.1, 1.0) == doctest::Approx(2.0));
  CHECK(std::abs(shaped_reward(1.0, 1e6, 0.1, 1.0) - 1.0) <= 1e-5);
  CHECK(shaped_reward(0.7, 0.4, 0.1, 0.0) == doctest::Approx(2.0));
  double prev = std::numeric_limits<double>::infinity();
  for (double kl = 0.0; kl < 5.0; kl += 0.05) {
    const double r = shaped_reward(0.3, kl, 0.1, 1.0);
    CHECK(r < prev);
    CHECK(r - 0.3 <= 1.0 / 0.1);
    prev = r;
  }
}

TEST_CASE("counterfactual state with the factual action is the factual successor") {
  SynthRecEnv env(small_world());
  env.reset(11);
  const ActionVec a = ActionVec::Constant(env.action_dim(), 0.4);
  const StateVec s_c = counterfactual_state(env, env.state(), a);
  CHECK(s_c.size() == env.state_dim());
  const StepResult factual = env.step(a);
  CHECK(s_c == factual.next_state);
}

TEST_CASE("synthesis never disturbs the factual environment") {
  SynthRecEnv with(small_world()), without(small_world());
  with.reset(5);
  without.reset(5);
  const auto policy = constant_policy(with.state_dim(), with.action_dim(), 0.8);
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    ActionVec a(with.action_dim());
    for (int i = 0; i < a.size(); ++i) a[i] = 2.0 * uniform01(rng) - 1.0;
    for (int k = 0; k < 3; ++k) {
      synthesize_counterfactual(with, with.state(), policy, rng);
      intervened_reward(with, StateVec::Zero(with.state_dim()), a);
    }
    const StepResult x = with.step(a);
    const StepResult y = without.step(a);
    CHECK(x.next_state == y.next_state);
    CHECK(x.reward == y.reward);
  }
}

TEST_CASE("synthesis checks the claimed state") {
  SynthRecEnv env(small_world());
  env.reset(1);
  const auto policy = constant_policy(env.state_dim(), env.action_dim(), 0.1);
  Rng rng(0);
  StateVec wrong = env.state();
  wrong[0] += 1.0;
  CHECK_THROWS_AS(synthesize_counterfactual(env, wrong, policy, rng), StateMismatch);
  CHECK_THROWS_AS(intervened_reward(env, StateVec::Zero(3), ActionVec::Zero(env.action_dim())),
                  DimensionError);
}

TEST_CASE("identity intervention reproduces the factual reward") {
  SynthRecEnv env(small_world());
  env.reset(2);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    ActionVec a(env.action_dim());
    for (int i = 0; i < a.size(); ++i) a[i] = 2.0 * uniform01(rng) - 1.0;
    const double r_i = intervened_reward(env, env.state(), a);
    CHECK(r_i == env.step(a).reward);
  }
}

TEST_CASE("intervened reward follows the click model") {
  SynthRecEnv env(small_world());
  env.reset(4);
  StateVec s_c = env.state();
  s_c.segment(8, 4) << 1, -1, -1, 1;
  ActionVec a(4);
  a << 0.3, -0.2, 0.9, -0.7;
  const double p = env.click_probability(s_c, a);
  const int n = 10000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    auto b = env.branch();
    b->reseed(derive_seed(99, 1, static_cast<std::uint64_t>(k)));
    sum += intervened_reward(*b, s_c, a);
  }
  CHECK(std::abs(sum / n - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("augmented transition shape") {
  SynthRecEnv env(small_world());
  env.reset(6);
  const auto policy = constant_policy(env.state_dim(), env.action_dim(), 0.5);
  Rng rng(1);
  const StateVec s = env.state();
  const ActionVec a_t = ActionVec::Constant(4, -0.3);
  auto probe = env.branch();
  const StepResult fact = probe->step(a_t);
  const Transition t = augment_step(env, s, a_t, fact.next_state, policy, rng);
  CHECK(t.action == a_t);
  CHECK(t.next_state == fact.next_state);
  CHECK(env.state() == s);

  // The policy echoing the factual action turns the tuple into the factual one.
  const ActionVec echo = ActionVec::Constant(4, std::tanh(0.5));
  auto probe2 = env.branch();
  const StepResult f2 = probe2->step(echo);
  const Transition e = augment_step(env, s, echo, f2.next_state, policy, rng);
  CHECK(e.state == f2.next_state);
  CHECK(e.action == echo);
  CHECK(e.next_state == f2.next_state);
}

TEST_CASE("augmented reward follows the click model") {
  SynthRecEnv env(small_world());
  env.reset(8);
  const auto policy = constant_policy(env.state_dim(), env.action_dim(), -0.6);
  const StateVec s = env.state();
  const ActionVec a_t = ActionVec::Constant(4, 0.2);
  const ActionVec a_c = policy.agent().greedy_action(s);
  Rng rng(2);
  const int n = 10000;
  double rewards = 0.0, probs = 0.0, var = 0.0;
  for (int k = 0; k < n; ++k) {
    SynthRecEnv b = env;
    b.reseed(derive_seed(7, 2, static_cast<std::uint64_t>(k)));
    // s_c carries the branch's drift noise, so each draw has its own oracle.
    const double p = b.click_probability(counterfactual_state(b, s, a_c), a_t);
    rewards += augment_step(b, s, a_t, s, policy, rng).reward;
    probs += p;
    var += p * (1.0 - p);
  }
  CHECK(std::abs(rewards - probs) / n <= 3.0 * std::sqrt(var) / n);
}

TEST_CASE("random mask") {
  Rng rng(5);
  Transition t{StateVec::LinSpaced(10, 1.0, 10.0), ActionVec::Constant(2, 0.3),
               StateVec::Constant(10, 2.0), 0.5, true};
  CHECK(random_mask_augment(t, 0.0, rng) == t);
  const Transition all = random_mask_augment(t, 1.0, rng);
  CHECK(all.state.isZero());
  CHECK(all.action == t.action);
  CHECK(all.next_state == t.next_state);
  CHECK(all.reward == t.reward);
  CHECK(all.terminal == t.terminal);
  CHECK_THROWS_AS(random_mask_augment(t, 1.5, rng), ConfigError);

  const double p = 0.2;
  Transition big{StateVec::Ones(1000), ActionVec::Zero(1), StateVec::Ones(1000), 0.0, false};
  long masked = 0;
  for (int k = 0; k < 100; ++k) masked += (random_mask_augment(big, p, rng).state.array() == 0.0).count();
  const double n = 100000.0;
  CHECK(std::abs(masked - p * n) <= 3.0 * std::sqrt(n * p * (1.0 - p)));
}

TEST_CASE("preservation score") {
  StateMasks masks{{0, 1}, {2}};
  const StateVec s = Eigen::Vector3d(1, 2, 3);
  const auto same = essential_preservation_score(masks, s, s);
  CHECK(same.delta_essential == 0.0);
  CHECK(same.delta_trivial == 0.0);
  const auto hand = essential_preservation_score(masks, s, Eigen::Vector3d(1, 2, 5));
  CHECK(hand.delta_essential == 0.0);
  CHECK(hand.delta_trivial == 2.0);
  const auto rms = essential_preservation_score(masks, s, Eigen::Vector3d(4, 6, 3));
  CHECK(rms.delta_essential == doctest::Approx(std::sqrt((9.0 + 16.0) / 2.0)));
  CHECK_THROWS_AS(essential_preservation_score(masks, s, Eigen::Vector2d(1, 2)), DimensionError);
  CHECK_THROWS_AS(essential_preservation_score(StateMasks{{0}, {2}}, s, s), DimensionError);

  SynthRecEnv env(small_world());
  const StateMasks truth = env.ground_truth_masks();
  env.reset(1);
  StateVec sc = env.state();
  for (int i : truth.trivial) sc[i] += 0.7;
  CHECK(essential_preservation_score(truth, env.state(), sc).delta_essential == 0.0);
}

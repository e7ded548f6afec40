#include <doctest.h>

#include "macs/error.hpp"
#include "macs/macs_training.hpp"
#include "macs/synthrec.hpp"
#include "macs/tracking_env.hpp"

#include <cmath>
#include <limits>

using namespace macs;

namespace {

AgentConfig small_agent() {
  AgentConfig c;
  c.hidden = 8;
  c.batch_size = 16;
  c.warmup_steps = 20;
  return c;
}

TrainSpec tracking_spec(AugmentMode mode) {
  TrainSpec spec;
  spec.agent = small_agent();
  spec.mode = mode;
  spec.episodes = 12;
  spec.max_steps = 10;
  spec.seed = 4;
  spec.macs.max_cf_episodes = 2;
  spec.macs.average_window = 2;
  spec.macs.estimator.warm_up = 8;
  return spec;
}

}  // namespace

TEST_CASE("threshold defaults") {
  MacsConfig c;
  const Thresholds t = resolve_thresholds(c, {-3.0, 1.0}, 10);
  CHECK(t.eps1 == doctest::Approx(5.0));
  CHECK(t.eps2 == doctest::Approx(0.6 * 10 * (1.0 + 10.0)));
  CHECK(t.delta1 == doctest::Approx(0.5));
  CHECK(t.delta2 == doctest::Approx(0.05 * 110.0));
  c.eps1 = 2.5;
  c.delta2 = 0.0;
  const Thresholds u = resolve_thresholds(c, {0.0, 1.0}, 20);
  CHECK(u.eps1 == 2.5);
  CHECK(u.delta2 == 0.0);
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("augment mode names") {
  for (auto m : {AugmentMode::Off, AugmentMode::Expert, AugmentMode::Joint, AugmentMode::RandomMask}) {
    CHECK(parse_augment_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_augment_mode("sometimes"), ConfigError);
}

TEST_CASE("unreachable eps1 reduces joint training to the plain baseline") {
  TrackingEnv env;
  for (Variant v : {Variant::DDPG, Variant::SAC, Variant::TD3}) {
    TrainSpec plain = tracking_spec(AugmentMode::Off);
    plain.variant = v;
    TrainSpec joint = plain;
    joint.mode = AugmentMode::Joint;
    joint.macs.eps1 = std::numeric_limits<double>::infinity();
    const TrainResult a = train_recommender(env, plain, {}, {}, true);
    const TrainResult b = train_recommender(env, joint, {}, {}, true);
    CHECK(a.policy.all_parameters() == b.policy.all_parameters());
    REQUIRE(a.factual.size() == b.factual.size());
    for (std::size_t i = 0; i < a.factual.size(); ++i) CHECK(a.factual[i] == b.factual[i]);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].train_return == b.log[i].train_return);
      CHECK(b.log[i].aug_count == 0);
      CHECK(b.log[i].stage2_rounds == 0);
    }
  }
}

TEST_CASE("joint thresholds rise after each Stage 2 round") {
  TrackingEnv env;
  TrainSpec spec = tracking_spec(AugmentMode::Joint);
  spec.macs.eps1 = -1000.0;
  spec.macs.delta1 = 0.25;
  spec.macs.eps2 = 1e9;  // each round stops at the episode cap
  spec.macs.delta2 = 3.0;
  const TrainResult r = train_recommender(env, spec);
  REQUIRE(r.counterfactual.has_value());
  // The first round fires once the averaging window is full.
  CHECK(r.log[0].stage2_rounds == 0);
  CHECK(*r.log[0].eps1 == -1000.0);
  CHECK(r.log[1].stage2_rounds == 1);
  CHECK(r.log[2].stage2_rounds == 2);
  CHECK(*r.log[2].eps1 == doctest::Approx(-1000.0 + 2 * 0.25));
  CHECK(*r.log[2].eps2 == doctest::Approx(1e9 + 2 * 3.0));

  // Once synthesis is active every step stores one extra transition.
  for (std::size_t i = 2; i < r.log.size(); ++i) {
    CHECK(r.log[i].aug_count - r.log[i - 1].aug_count ==
          r.log[i].env_steps - r.log[i - 1].env_steps);
  }
}

TEST_CASE("expert mode stores one counterfactual per step") {
  TrackingEnv env;
  MacsConfig mc;
  mc.eps1 = -1e9;
  mc.max_cf_episodes = 2;
  mc.estimator.warm_up = 8;
  ActorCriticAgent expert(Variant::DDPG, 1, 1, small_agent(), 3);
  const CounterfactualPolicy cf = train_macs_expert(expert, env, small_agent(), mc, 10, 1);
  CHECK(cf.frozen());
  TrainSpec spec = tracking_spec(AugmentMode::Expert);
  const TrainResult r = train_recommender(env, spec, cf);
  for (const auto& e : r.log) CHECK(e.aug_count == e.env_steps);
  CHECK_THROWS_AS(train_recommender(env, spec), ConfigError);
}

TEST_CASE("factual stream is untouched by augmentation") {
  SynthRecConfig c;
  c.seed = 2;
  SynthRecEnv env(c);
  MacsConfig mc;
  mc.eps1 = -1e9;
  mc.max_cf_episodes = 1;
  mc.average_window = 1;
  AgentConfig ac = small_agent();
  ac.batch_size = 4096;  // no parameter updates inside the compared window
  ac.buffer_capacity = 8192;
  ActorCriticAgent expert(Variant::DDPG, env.state_dim(), env.action_dim(), ac, 3);
  const CounterfactualPolicy cf = train_macs_expert(expert, env, ac, mc, 20, 1);
  TrainSpec spec;
  spec.agent = ac;
  spec.macs = mc;
  spec.episodes = 10;
  spec.max_steps = 20;
  spec.seed = 8;
  const TrainResult base = train_recommender(env, spec, {}, {}, true);
  for (AugmentMode m : {AugmentMode::Expert, AugmentMode::Joint, AugmentMode::RandomMask}) {
    CAPTURE(to_string(m));
    spec.mode = m;
    const TrainResult r = train_recommender(env, spec, cf, {}, true);
    REQUIRE(r.factual.size() == base.factual.size());
    for (std::size_t i = 0; i < r.factual.size(); ++i) CHECK(r.factual[i] == base.factual[i]);
    CHECK(r.log.back().aug_count == (m == AugmentMode::Joint ? 180 : 200));  // joint starts after episode 1
  }
}

TEST_CASE("expert qualification") {
  TrackingEnv env;
  MacsConfig mc;
  mc.eps1 = 9.9;  // an untrained actor is far below the optimum of 10
  ActorCriticAgent expert(Variant::DDPG, 1, 1, small_agent(), 3);
  CHECK_THROWS_AS(train_macs_expert(expert, env, small_agent(), mc, 10, 1), ExpertTooWeak);
}

TEST_CASE("expert-mode training is deterministic") {
  TrackingEnv env;
  MacsConfig mc;
  mc.eps1 = -1e9;
  mc.max_cf_episodes = 3;
  mc.estimator.warm_up = 8;
  ActorCriticAgent expert(Variant::DDPG, 1, 1, small_agent(), 3);
  CfTrainingReport ra, rb;
  const auto a = train_macs_expert(expert, env, small_agent(), mc, 10, 5, &ra);
  const auto b = train_macs_expert(expert, env, small_agent(), mc, 10, 5, &rb);
  CHECK(a.agent().all_parameters() == b.agent().all_parameters());
  CHECK(ra.shaped_returns == rb.shaped_returns);
  CHECK(ra.episodes == 3);
  CHECK_FALSE(ra.converged);
  CHECK_FALSE(a.converged());
}

TEST_CASE("no bonus before the estimator warms up") {
  TrackingEnv env;
  MacsConfig mc;
  mc.lambda_base = 0.0;
  mc.max_cf_episodes = 3;
  mc.estimator.window = 512;
  mc.estimator.warm_up = 500;  // never reached in 30 steps
  ActorCriticAgent expert(Variant::DDPG, 1, 1, small_agent(), 3);
  CounterfactualTrainer trainer(1, 1, small_agent(), mc, TrainingMode::Expert, 2);
  const CfTrainingReport rep = trainer.train(expert, env, 1e9, 10);
  REQUIRE(rep.shaped_returns.size() == 3);
  for (double r : rep.shaped_returns) CHECK(r == 0.0);
  CHECK_FALSE(rep.final_kl.has_value());

  // With warm-up met the bonus is present and bounded by 1/eps per step.
  mc.estimator.warm_up = 4;
  CounterfactualTrainer warm(1, 1, small_agent(), mc, TrainingMode::Expert, 2);
  const CfTrainingReport w = warm.train(expert, env, 1e9, 10);
  CHECK(w.final_kl.has_value());
  CHECK(w.shaped_returns.back() > 0.0);
  for (double r : w.shaped_returns) CHECK(r <= 10 * (1.0 / mc.eps) + 1e-9);
}

TEST_CASE("converged policy is flagged") {
  TrackingEnv env;
  MacsConfig mc;
  mc.eps1 = -1e9;
  mc.eps2 = -1e9;
  mc.average_window = 2;
  mc.estimator.warm_up = 8;
  ActorCriticAgent expert(Variant::DDPG, 1, 1, small_agent(), 3);
  CfTrainingReport rep;
  const auto cf = train_macs_expert(expert, env, small_agent(), mc, 10, 5, &rep);
  CHECK(rep.converged);
  CHECK(rep.episodes == 2);
  CHECK(cf.converged());
}

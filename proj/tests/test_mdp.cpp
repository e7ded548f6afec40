#include <doctest.h>

#include "macs/error.hpp"
#include "macs/mdp.hpp"
#include "macs/synthrec.hpp"
#include "macs/tracking_env.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace macs;

namespace {

// Independent oracle: explicit powers, summed back to front.
double brute_discounted(const std::vector<double>& r, double gamma) {
  double total = 0.0;
  for (std::size_t k = r.size(); k-- > 0;) total += std::pow(gamma, static_cast<double>(k)) * r[k];
  return total;
}

}  // namespace

TEST_CASE("discounted_return examples") {
  CHECK(discounted_return(std::vector<double>{}, 0.9) == 0.0);
  CHECK(discounted_return(std::vector<double>{1, 1, 1}, 0.5) == doctest::Approx(1.75).epsilon(1e-15));
  const std::vector<double> r{0.2, -0.1, 0.7, 0.0, 0.3};
  const double oracle = brute_discounted(r, 0.9);
  CHECK(oracle == doctest::Approx(0.87383).epsilon(1e-12));
  CHECK(discounted_return(r, 0.9) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("discounted_return properties") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + trial % 9), b(a.size());
    for (auto& x : a) x = standard_normal(rng);
    for (auto& x : b) x = standard_normal(rng);
    const double g = uniform01(rng);
    CHECK(discounted_return(a, 0.0) == a[0]);
    std::vector<double> sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = 2.0 * a[i] - 3.0 * b[i];
    CHECK(discounted_return(sum, g) ==
          doctest::Approx(2.0 * discounted_return(a, g) - 3.0 * discounted_return(b, g)).epsilon(1e-12));
  }
}

TEST_CASE("discounted_return rejects bad input") {
  CHECK_THROWS_AS(discounted_return(std::vector<double>{1.0}, 1.5), ConfigError);
  CHECK_THROWS_AS(discounted_return(std::vector<double>{1.0}, -0.1), ConfigError);
  CHECK_THROWS_AS(discounted_return(std::vector<double>{NAN}, 0.5), InvalidReward);
}

TEST_CASE("transition validation") {
  Transition t{StateVec::Zero(2), ActionVec::Zero(1), StateVec::Zero(2), 1.0, false};
  CHECK_NOTHROW(t.validate());
  t.reward = INFINITY;
  CHECK_THROWS_AS(t.validate(), InvalidReward);
  t.reward = 0.0;
  t.next_state = StateVec::Zero(3);
  CHECK_THROWS_AS(t.validate(), DimensionError);
}

TEST_CASE("environment contract on both simulators") {
  SynthRecEnv synth{SynthRecConfig{}};
  TrackingEnv tracking;
  for (Environment* env : std::vector<Environment*>{&synth, &tracking}) {
    CHECK_THROWS_AS(env->step(ActionVec::Zero(env->action_dim())), StateMismatch);
    env->reset(11);
    CHECK(env->state().size() == env->state_dim());
    CHECK_THROWS_AS(env->step(ActionVec::Zero(env->action_dim() + 1)), DimensionError);
    ActionVec far = ActionVec::Constant(env->action_dim(), 1.5);
    CHECK_THROWS_AS(env->step(far), ActionBoundsError);

    // Same seed and actions give the same rewards and states.
    Rng rng(3);
    std::vector<ActionVec> actions;
    for (int t = 0; t < 15; ++t) {
      ActionVec a(env->action_dim());
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = 2.0 * uniform01(rng) - 1.0;
      actions.push_back(a);
    }
    auto run = [&](Environment& e) {
      e.reset(99);
      std::vector<StepResult> out;
      for (const auto& a : actions) out.push_back(e.step(a));
      return out;
    };
    const auto first = run(*env);
    const auto second = run(*env);
    for (std::size_t t = 0; t < first.size(); ++t) {
      CHECK(first[t].reward == second[t].reward);
      CHECK(first[t].next_state == second[t].next_state);
    }

    // A branch replays the original exactly and never disturbs it.
    env->reset(5);
    env->step(actions[0]);
    auto copy = env->branch();
    const auto in_copy = copy->step(actions[1]);
    copy->step(actions[2]);
    const auto original = env->step(actions[1]);
    CHECK(original.reward == in_copy.reward);
    CHECK(original.next_state == in_copy.next_state);
  }
}

TEST_CASE("run_episode produces a chained trajectory") {
  SynthRecEnv env{SynthRecConfig{}};
  const Policy zero = [](const StateVec&) { return ActionVec::Zero(27); };
  const Trajectory t = run_episode(env, zero, 20, 4);
  CHECK(t.transitions.size() == 20);
  CHECK(t.is_chained());
  CHECK(t.seed == 4);
  double sum = 0.0;
  for (const auto& tr : t.transitions) sum += tr.reward;
  CHECK(t.total_reward() == sum);
  CHECK(t.mean_reward() == doctest::Approx(sum / 20.0));
}

TEST_CASE("tracking env reward") {
  TrackingEnv env;
  env.reset(1);
  const double x = env.state()[0];
  ActionVec a(1);
  a[0] = std::clamp(x, -1.0, 1.0);
  CHECK(env.step(a).reward == doctest::Approx(1.0));
  const double y = env.state()[0];
  a[0] = 0.0;
  CHECK(env.step(a).reward == doctest::Approx(1.0 - y * y));
}

#include <doctest.h>

#include "macs/error.hpp"
#include "macs/experiment.hpp"
#include "macs/matrix_factorization.hpp"
#include "macs/offline_env.hpp"
#include "macs/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <limits>
#include <memory>
#include <sstream>

using namespace macs;

namespace {

RatingsTable parse(const std::string& text) {
  std::istringstream in(text);
  return ingest_ratings(in);
}

// r_ui = 1 + 4 * a_u * b_i with a, b in [0, 1]: exactly rank one after the
// global offset, so a rank-one model with biases can fit it.
RatingsTable rank_one_table(int users, int items, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> a(users), b(items);
  for (auto& x : a) x = 0.2 + 0.8 * uniform01(rng);
  for (auto& x : b) x = 0.2 + 0.8 * uniform01(rng);
  RatingsTable t;
  std::int64_t ts = 1;
  for (int u = 0; u < users; ++u)
    for (int i = 0; i < items; ++i) t.add({u + 1, i + 1, 1.0 + 4.0 * a[u] * b[i], ts++});
  return t;
}

}  // namespace

TEST_CASE("ingest the MovieLens tab layout") {
  const RatingsTable t = parse("196\t242\t3\t881250949\n186\t302\t3\t891717742\n");
  REQUIRE(t.size() == 2);
  CHECK(t.records()[0] == RatingRecord{196, 242, 3.0, 881250949});
  CHECK(t.n_users() == 2);
  CHECK(t.user_index(0) == 0);
  CHECK(t.item_index(1) == 1);
}

TEST_CASE("delimiters, header and blank lines") {
  const RatingsTable comma = parse("userId,movieId,rating,timestamp\n1,31,2.5,1260759144\n\n1,1029,3,1260759179\n");
  CHECK(comma.size() == 2);
  CHECK(comma.records()[0].rating == 2.5);
  const RatingsTable colons = parse("1::1193::5::978300760\n1::661::3::978302109\n");
  CHECK(colons.size() == 2);
  CHECK(colons.records()[1] == RatingRecord{1, 661, 3.0, 978302109});
}

TEST_CASE("ingest errors") {
  CHECK_THROWS_AS(parse(""), EmptyDataset);
  CHECK_THROWS_AS(parse("user\titem\trating\tts\n"), EmptyDataset);
  try {
    parse("1\t2\t3\t4\n5\t6\t7\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("1\t2\t6\t4\n"), RangeError);
  CHECK_THROWS_AS(parse("1\t2\t0.5\t4\n"), RangeError);
  CHECK_THROWS_AS(parse("1\t2\t3\t4\n1\t2\t4\t4\n"), ParseError);
  CHECK_THROWS_AS(parse("1\tx\t3\t4\n1\t2\t4\t4\n"), ParseError);
}

TEST_CASE("serialize then ingest is the identity") {
  const RatingsTable t = parse("7,3,4.5,10\n2,3,1,11\n7,9,5,12\n");
  const RatingsTable back = parse(serialize_ratings(t));
  CHECK(back == t);
  CHECK(back.n_users() == t.n_users());
  for (std::size_t r = 0; r < t.size(); ++r) {
    CHECK(back.user_index(r) == t.user_index(r));
    CHECK(back.item_index(r) == t.item_index(r));
  }
}

TEST_CASE("rank-one table is recovered") {
  const RatingsTable t = rank_one_table(30, 40, 1);
  MfParams p;
  p.k = 1;
  p.epochs = 400;
  p.lr = 0.02;
  p.reg = 0.0;
  p.seed = 3;
  const MfTrainResult r = train_mf(t, p);
  CHECK(r.holdout_rmse <= 0.05);
  CHECK(r.holdout_records.size() == 240);
}

TEST_CASE("training loss is non-increasing at small lr") {
  const RatingsTable t = rank_one_table(30, 40, 2);
  MfParams p;
  p.k = 1;
  p.epochs = 40;
  p.lr = 1e-3;
  p.seed = 4;
  const MfTrainResult r = train_mf(t, p);
  for (std::size_t e = 1; e < r.train_loss.size(); ++e) {
    CHECK(r.train_loss[e] <= r.train_loss[e - 1]);
  }
}

TEST_CASE("bias-only model and clipping") {
  const RatingsTable t = parse("1\t1\t5\t1\n1\t2\t5\t2\n2\t1\t1\t3\n2\t2\t1\t4\n");
  MfParams p;
  p.k = 0;
  p.holdout_frac = 0.0;
  p.epochs = 50;
  const MfTrainResult r = train_mf(t, p);
  CHECK(std::isnan(r.holdout_rmse));
  const MfModel& m = r.model;
  CHECK(m.rank() == 0);
  for (int u = 0; u < 2; ++u)
    for (int i = 0; i < 2; ++i) {
      CHECK(m.predict(u, i) == std::clamp(m.global_mean + m.user_bias[u] + m.item_bias[i], 1.0, 5.0));
    }
  CHECK(m.predict(0, 0) > m.predict(1, 0));

  MfModel wild = m;
  wild.global_mean = 40.0;
  CHECK(wild.predict(0, 0) == 5.0);
  wild.global_mean = -40.0;
  CHECK(wild.predict(0, 0) == 1.0);
  CHECK_THROWS_AS(train_mf(RatingsTable{}, p), EmptyDataset);
}

TEST_CASE("nearest item matches a brute-force scan") {
  Rng rng(6);
  Eigen::MatrixXd f(20, 3);
  for (Eigen::Index r = 0; r < 20; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) f(r, c) = standard_normal(rng);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd q(3);
    for (int c = 0; c < 3; ++c) q[c] = standard_normal(rng);
    std::vector<bool> excluded(20, false);
    for (int i = 0; i < 20; ++i) excluded[i] = uniform01(rng) < 0.3;
    int oracle = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20; ++i) {
      if (excluded[i]) continue;
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += (f(i, c) - q[c]) * (f(i, c) - q[c]);
      if (d < best) {
        best = d;
        oracle = i;
      }
    }
    CHECK(nearest_item(f, q, excluded) == oracle);
  }
  CHECK(nearest_item(f, f.row(7).transpose(), {}) == 7);
  CHECK(nearest_item(f, f.row(7).transpose(), std::vector<bool>(20, true)) == -1);
}

TEST_CASE("nearest item ties go to the smallest index in any storage order") {
  Eigen::MatrixXd f(4, 2);
  f << 1, 0, 0, 1, -1, 0, 0, -1;
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  CHECK(nearest_item(f, origin, {}) == 0);
  Eigen::MatrixXd g(4, 2);
  g << 0, -1, -1, 0, 0, 1, 1, 0;
  CHECK(nearest_item(g, origin, {}) == 0);
}

namespace {

struct OfflineFixture {
  RatingsTable table;
  std::shared_ptr<const MfModel> model;

  OfflineFixture() {
    table = rank_one_table(12, 15, 9);
    // User 13 rates everything low.
    std::int64_t ts = 100000;
    for (int i = 1; i <= 15; ++i) table.add({13, i, 1.0, ts++});
    MfParams p;
    p.k = 2;
    p.epochs = 60;
    p.holdout_frac = 0.0;
    model = std::make_shared<const MfModel>(train_mf(table, p).model);
  }
};

}  // namespace

TEST_CASE("offline env layout and selection") {
  OfflineFixture fx;
  OfflineRecEnv env = make_offline_env(fx.model, fx.table, 2, 1);
  CHECK(env.state_dim() == 8);
  CHECK(env.action_dim() == 2);
  env.reset(3);
  const int user = env.current_user();
  CHECK(env.state().head(2) == fx.model->user_factors.row(user).transpose());
  CHECK(env.state().tail(6).isZero());

  const ActionVec a = fx.model->item_factors.row(4).transpose().cwiseMax(-1.0).cwiseMin(1.0);
  if (a == fx.model->item_factors.row(4).transpose()) {
    env.step(a);
    CHECK(env.last_item() == 4);
  }
  // Every item is shown exactly once before the episode ends.
  env.reset(4);
  std::set<int> shown;
  StepResult r{};
  for (int t = 0; t < 15; ++t) {
    r = env.step(ActionVec::Zero(2));
    CHECK(shown.insert(env.last_item()).second);
    CHECK(r.terminal == (t == 14));
  }
  CHECK_THROWS_AS(make_offline_env(fx.model, fx.table, 0, 1), ConfigError);
}

TEST_CASE("a user without relevant items never earns reward") {
  OfflineFixture fx;
  OfflineRecEnv env = make_offline_env(fx.model, fx.table, 1, 1);
  int found = 0;
  for (std::uint64_t s = 0; s < 200 && found < 3; ++s) {
    env.reset(s);
    if (fx.table.user_id(env.current_user()) != 13) continue;
    ++found;
    CHECK(env.relevant_item_count(env.current_user()) == 0);
    for (int t = 0; t < 15; ++t) CHECK(env.step(ActionVec::Zero(2)).reward == 0.0);
  }
  CHECK(found > 0);
}

TEST_CASE("offline metrics on a hand-built episode") {
  OfflineEpisode ep;
  ep.relevant_items = 3;
  ep.steps = {{10, true, true, true}, {11, false, true, false}, {12, true, true, true},
              {13, false, false, false}};
  const OfflineMetrics m = offline_metrics_from_episodes({ep});
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 2.0 / 3.0);
  CHECK(m.accuracy == 0.75);
  CHECK(m.episodes == 1);
  CHECK(m.degenerate_episodes == 0);

  OfflineEpisode none;
  none.relevant_items = 0;
  none.steps = {{1, false, false, false}};
  const OfflineMetrics d = offline_metrics_from_episodes({ep, none});
  CHECK(d.recall == doctest::Approx(1.0 / 3.0));
  CHECK(d.degenerate_episodes == 1);

  OfflineEpisode all;
  all.relevant_items = 2;
  all.steps = {{1, true, true, true}, {2, true, false, true}};
  CHECK(offline_metrics_from_episodes({all}).precision == 1.0);
}

#include "macs/matrix_factorization.hpp"

#include "macs/error.hpp"
#include "macs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace macs {

double MfModel::raw_score(int user, int item) const {
  double s = global_mean + user_bias[user] + item_bias[item];
  if (rank() > 0) s += user_factors.row(user).dot(item_factors.row(item));
  return s;
}

double MfModel::predict(int user, int item) const {
  return std::clamp(raw_score(user, item), 1.0, 5.0);
}

namespace {

double objective(const MfModel& m, const RatingsTable& table,
                 const std::vector<std::size_t>& records, double reg) {
  double total = 0.0;
  for (std::size_t r : records) {
    const int u = table.user_index(r);
    const int i = table.item_index(r);
    const double e = table.records()[r].rating - m.raw_score(u, i);
    double penalty = m.user_bias[u] * m.user_bias[u] + m.item_bias[i] * m.item_bias[i];
    if (m.rank() > 0) {
      penalty += m.user_factors.row(u).squaredNorm() + m.item_factors.row(i).squaredNorm();
    }
    total += e * e + reg * penalty;
  }
  return total / static_cast<double>(records.size());
}

}  // namespace

MfTrainResult train_mf(const RatingsTable& table, const MfParams& params) {
  if (table.empty()) throw EmptyDataset("cannot factorize an empty ratings table");
  if (params.k < 0) throw ConfigError("k must be non-negative");
  if (!(params.holdout_frac >= 0.0 && params.holdout_frac < 1.0)) {
    throw ConfigError("holdout_frac must lie in [0, 1)");
  }
  if (params.epochs < 0) throw ConfigError("epochs must be non-negative");

  Rng rng(derive_seed(params.seed, 0x3f));
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_holdout =
      static_cast<std::size_t>(std::floor(params.holdout_frac * static_cast<double>(order.size())));
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_holdout), order.end());
  if (train.empty()) throw EmptyDataset("training split is empty");

  MfTrainResult result;
  MfModel& m = result.model;
  m.user_factors.resize(table.n_users(), params.k);
  m.item_factors.resize(table.n_items(), params.k);
  for (Eigen::Index r = 0; r < m.user_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < params.k; ++c)
      m.user_factors(r, c) = params.init_scale * standard_normal(rng);
  for (Eigen::Index r = 0; r < m.item_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < params.k; ++c)
      m.item_factors(r, c) = params.init_scale * standard_normal(rng);
  m.user_bias = Eigen::VectorXd::Zero(table.n_users());
  m.item_bias = Eigen::VectorXd::Zero(table.n_items());
  double sum = 0.0;
  for (std::size_t r : train) sum += table.records()[r].rating;
  m.global_mean = sum / static_cast<double>(train.size());

  const double lr = params.lr;
  const double reg = params.reg;
  Eigen::VectorXd pu_old;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t r : train) {
      const int u = table.user_index(r);
      const int i = table.item_index(r);
      const double e = table.records()[r].rating - m.raw_score(u, i);
      m.user_bias[u] += lr * (e - reg * m.user_bias[u]);
      m.item_bias[i] += lr * (e - reg * m.item_bias[i]);
      if (params.k > 0) {
        pu_old = m.user_factors.row(u).transpose();
        m.user_factors.row(u) += lr * (e * m.item_factors.row(i) - reg * m.user_factors.row(u));
        m.item_factors.row(i) += lr * (e * pu_old.transpose() - reg * m.item_factors.row(i));
      }
    }
    result.train_loss.push_back(objective(m, table, train, reg));
  }

  if (holdout.empty()) {
    result.holdout_rmse = std::numeric_limits<double>::quiet_NaN();
  } else {
    double se = 0.0;
    for (std::size_t r : holdout) {
      const double e = table.records()[r].rating - m.predict(table.user_index(r), table.item_index(r));
      se += e * e;
    }
    result.holdout_rmse = std::sqrt(se / static_cast<double>(holdout.size()));
  }
  std::sort(holdout.begin(), holdout.end());
  result.holdout_records = std::move(holdout);
  return result;
}

}  // namespace macs

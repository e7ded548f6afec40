#pragma once

#include "macs/ratings.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace macs {

struct MfModel {
  Eigen::MatrixXd user_factors;  // n_users x k
  Eigen::MatrixXd item_factors;  // n_items x k
  Eigen::VectorXd user_bias;
  Eigen::VectorXd item_bias;
  double global_mean = 0.0;

  int rank() const { return static_cast<int>(user_factors.cols()); }
  int n_users() const { return static_cast<int>(user_factors.rows()); }
  int n_items() const { return static_cast<int>(item_factors.rows()); }

  double raw_score(int user, int item) const;
  // Clipped to [1, 5].
  double predict(int user, int item) const;
};

struct MfParams {
  int k = 16;
  int epochs = 20;
  double lr = 0.01;
  double reg = 0.05;
  double holdout_frac = 0.2;
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const MfParams&) const = default;
};

struct MfTrainResult {
  MfModel model;
  // NaN when the holdout split is empty.
  double holdout_rmse = 0.0;
  // Regularized per-record squared-error objective after each epoch.
  std::vector<double> train_loss;
  std::vector<std::size_t> holdout_records;
};

// Biased matrix factorization fitted by seeded SGD on the training split.
MfTrainResult train_mf(const RatingsTable& table, const MfParams& params);

}  // namespace macs

#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace macs {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(Eigen::Index n, AdamConfig config)
      : first_moment(Eigen::VectorXd::Zero(n)),
        second_moment(Eigen::VectorXd::Zero(n)),
        config(config) {}

  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;
  AdamConfig config;
};

// Bias-corrected Adam. Throws NumericsError (leaving everything untouched) on a
// non-finite gradient.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

// target <- tau * online + (1 - tau) * target.
void polyak_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau);

}  // namespace macs

#include "macs/optim.hpp"

#include "macs/error.hpp"

#include <cmath>

namespace macs {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment sizes differ");
  }
  if (!grads.allFinite()) throw NumericsError("adam_step: non-finite gradient");
  const auto& c = state.config;
  state.step += 1;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
  state.second_moment =
      c.beta2 * state.second_moment + (1.0 - c.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  params.array() -= c.lr * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + c.eps);
}

void polyak_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau) {
  if (target.size() != online.size()) throw DimensionError("polyak_update: size mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("polyak tau must lie in [0, 1]");
  if (tau == 1.0) {
    target = online;
  } else if (tau != 0.0) {
    target = tau * online + (1.0 - tau) * target;
  }
}

}  // namespace macs

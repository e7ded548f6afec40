#include "macs/reward_estimator.hpp"

#include "macs/error.hpp"

#include <algorithm>
#include <cmath>

namespace macs {

void EstimatorConfig::validate() const {
  if (bin_count < 1) throw ConfigError("estimator bin_count must be positive");
  if (!(hi > lo)) throw ConfigError("estimator range needs hi > lo");
  if (!(smoothing >= 0.0)) throw ConfigError("estimator smoothing must be non-negative");
  if (window < 1) throw ConfigError("estimator window must be positive");
  if (warm_up < 0 || warm_up > window) throw ConfigError("estimator warm_up must lie in [0, window]");
}

RewardDistEstimator::RewardDistEstimator(EstimatorConfig config) : config_(config) {
  config_.validate();
}

int RewardDistEstimator::bin_of(double reward) const {
  const double scaled = (reward - config_.lo) / (config_.hi - config_.lo) * config_.bin_count;
  const auto bin = static_cast<long long>(std::floor(scaled));
  return static_cast<int>(std::clamp<long long>(bin, 0, config_.bin_count - 1));
}

void RewardDistEstimator::record(Window which, double reward) {
  if (!std::isfinite(reward)) throw InvalidReward("non-finite reward recorded");
  auto& w = which == Window::Observational ? observational_ : intervened_;
  w.push_back(std::clamp(reward, config_.lo, config_.hi));
  while (w.size() > static_cast<std::size_t>(config_.window)) w.pop_front();
}

const std::deque<double>& RewardDistEstimator::samples(Window which) const {
  return which == Window::Observational ? observational_ : intervened_;
}

std::size_t RewardDistEstimator::size(Window which) const { return samples(which).size(); }

Eigen::VectorXd RewardDistEstimator::histogram(Window which) const {
  const auto& w = samples(which);
  if (w.empty()) throw InsufficientData("reward window is empty");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(config_.bin_count);
  for (double r : w) counts[bin_of(r)] += 1.0;
  const double total = static_cast<double>(w.size()) + config_.bin_count * config_.smoothing;
  return (counts.array() + config_.smoothing).matrix() / total;
}

bool RewardDistEstimator::warmed_up() const {
  const auto need = static_cast<std::size_t>(std::max(config_.warm_up, 1));
  return observational_.size() >= need && intervened_.size() >= need;
}

std::optional<double> RewardDistEstimator::kl() const {
  if (!warmed_up()) return std::nullopt;
  return kl_divergence(histogram(Window::Intervened), histogram(Window::Observational));
}

void RewardDistEstimator::clear() {
  observational_.clear();
  intervened_.clear();
}

Eigen::VectorXd estimate_hist(const RewardDistEstimator& estimator, Window which) {
  return estimator.histogram(which);
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: length mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) throw SupportError("kl_divergence: q has zero mass where p does not");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative total for p == q up to ulps.
  return std::max(kl, 0.0);
}

double shaped_reward(double base_reward, double kl, double eps, double lambda_base) {
  return lambda_base * base_reward + 1.0 / (kl + eps);
}

}  // namespace macs

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <optional>

namespace macs {

enum class Window { Observational, Intervened };

struct EstimatorConfig {
  int bin_count = 20;
  double lo = 0.0;
  double hi = 1.0;
  double smoothing = 1.0;
  int window = 512;
  int warm_up = 64;

  void validate() const;
  bool operator==(const EstimatorConfig&) const = default;
};

// Paired sliding windows of observational and intervened rewards, each turned
// into a Laplace-smoothed equal-width histogram over [lo, hi].
class RewardDistEstimator {
 public:
  explicit RewardDistEstimator(EstimatorConfig config = {});

  // Values outside [lo, hi] are clamped; non-finite values throw InvalidReward.
  void record(Window which, double reward);
  Eigen::VectorXd histogram(Window which) const;
  std::size_t size(Window which) const;
  bool warmed_up() const;
  // KL(intervened || observational) once both windows are warm.
  std::optional<double> kl() const;
  void clear();

  const EstimatorConfig& config() const { return config_; }
  int bin_of(double reward) const;

 private:
  const std::deque<double>& samples(Window which) const;

  EstimatorConfig config_;
  std::deque<double> observational_;
  std::deque<double> intervened_;
};

// (count_i + smoothing) / (total + bins * smoothing). InsufficientData when the
// window is empty.
Eigen::VectorXd estimate_hist(const RewardDistEstimator& estimator, Window which);

// sum_i p_i ln(p_i / q_i), natural log, 0 ln(0/q) = 0.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// lambda * base + 1 / (kl + eps).
double shaped_reward(double base_reward, double kl, double eps, double lambda_base);

}  // namespace macs

#pragma once

#include "macs/matrix_factorization.hpp"
#include "macs/mdp.hpp"
#include "macs/ratings.hpp"
#include "macs/rng.hpp"

#include <memory>
#include <unordered_map>
#include <vector>

namespace macs {

// Index of the row of `factors` nearest to `query` in Euclidean distance,
// skipping rows flagged in `excluded` (may be empty). Ties go to the smallest
// index. Returns -1 when every row is excluded.
int nearest_item(const Eigen::MatrixXd& factors, const Eigen::VectorXd& query,
                 const std::vector<bool>& excluded);

struct OfflineEnvConfig {
  int history_len = 2;
  double relevance_threshold = 4.0;

  bool operator==(const OfflineEnvConfig&) const = default;
};

// Interactive environment replayed from a rating log through an MF model.
// State: [user factor | mean of history factors | history slot 0 .. m-1], each
// block k wide. An action is a point in item-factor space; the nearest item not
// yet recommended this episode is shown and the reward is 1 when its rating
// (logged if the user rated it, otherwise predicted) reaches the threshold.
class OfflineRecEnv final : public Environment {
 public:
  OfflineRecEnv(std::shared_ptr<const MfModel> model, const RatingsTable& table,
                OfflineEnvConfig config);

  int state_dim() const override { return (2 + config_.history_len) * k_; }
  int action_dim() const override { return k_; }
  RewardRange reward_range() const override { return {0.0, 1.0}; }

  StateVec reset(std::uint64_t seed) override;
  StepResult step(const ActionVec& action) override;
  std::unique_ptr<Environment> branch() const override {
    return std::make_unique<OfflineRecEnv>(*this);
  }
  const StateVec& state() const override { return state_; }
  // Replaces the observation only; the sampled user and the set of items
  // already shown are kept.
  void force_state(const StateVec& state) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

  int current_user() const { return user_; }
  int last_item() const { return last_item_; }
  const MfModel& model() const { return *model_; }
  const OfflineEnvConfig& config() const { return config_; }

  // Logged rating when present, otherwise the clipped MF prediction.
  double rating(int user, int item) const;
  bool is_relevant(int user, int item) const;
  bool predicted_relevant(int user, int item) const;
  // The user rated the item at or above the threshold in the log.
  bool logged_relevant(int user, int item) const;
  // Items the user rated at or above the threshold in the log.
  int relevant_item_count(int user) const;

 private:
  void rebuild_state();

  struct UserLog {
    std::unordered_map<int, double> ratings;
    int relevant = 0;
  };

  std::shared_ptr<const MfModel> model_;
  std::shared_ptr<const std::vector<UserLog>> logs_;
  OfflineEnvConfig config_;
  int k_ = 0;
  int user_ = 0;
  int last_item_ = -1;
  std::vector<bool> shown_;
  std::vector<int> history_;  // item indices, most recent first; -1 = empty
  StateVec state_;
  Rng rng_;
};

OfflineRecEnv make_offline_env(std::shared_ptr<const MfModel> model, const RatingsTable& table,
                               int history_len, std::uint64_t seed);

}  // namespace macs

#include "macs/offline_env.hpp"

#include "macs/error.hpp"

#include <algorithm>
#include <limits>

namespace macs {

int nearest_item(const Eigen::MatrixXd& factors, const Eigen::VectorXd& query,
                 const std::vector<bool>& excluded) {
  if (factors.cols() != query.size()) throw DimensionError("query dimension != factor rank");
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < factors.rows(); ++i) {
    if (!excluded.empty() && excluded[static_cast<std::size_t>(i)]) continue;
    const double d = (factors.row(i).transpose() - query).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

OfflineRecEnv::OfflineRecEnv(std::shared_ptr<const MfModel> model, const RatingsTable& table,
                             OfflineEnvConfig config)
    : model_(std::move(model)), config_(config) {
  if (config_.history_len < 1) throw ConfigError("offline env needs history_len >= 1");
  if (!model_) throw ConfigError("offline env needs a model");
  k_ = model_->rank();
  if (k_ < 1) throw ConfigError("offline env needs an MF model of rank >= 1");
  if (model_->n_users() != table.n_users() || model_->n_items() != table.n_items()) {
    throw ConfigError("MF model was not trained on this ratings table");
  }
  auto logs = std::make_shared<std::vector<UserLog>>(static_cast<std::size_t>(table.n_users()));
  std::vector<std::int64_t> latest(table.size());
  std::unordered_map<std::int64_t, std::int64_t> stamp;  // (user, item) -> timestamp
  for (std::size_t r = 0; r < table.size(); ++r) {
    const int u = table.user_index(r);
    const int i = table.item_index(r);
    const auto key = static_cast<std::int64_t>(u) * table.n_items() + i;
    const auto& rec = table.records()[r];
    auto it = stamp.find(key);
    if (it == stamp.end() || rec.timestamp >= it->second) {
      stamp[key] = rec.timestamp;
      (*logs)[static_cast<std::size_t>(u)].ratings[i] = rec.rating;
    }
  }
  for (auto& log : *logs) {
    for (const auto& [item, rating] : log.ratings) {
      if (rating >= config_.relevance_threshold) ++log.relevant;
    }
  }
  logs_ = std::move(logs);
  shown_.assign(static_cast<std::size_t>(model_->n_items()), false);
  history_.assign(static_cast<std::size_t>(config_.history_len), -1);
  state_ = StateVec::Zero(state_dim());
}

double OfflineRecEnv::rating(int user, int item) const {
  const auto& log = (*logs_)[static_cast<std::size_t>(user)].ratings;
  auto it = log.find(item);
  return it != log.end() ? it->second : model_->predict(user, item);
}

bool OfflineRecEnv::is_relevant(int user, int item) const {
  return rating(user, item) >= config_.relevance_threshold;
}

bool OfflineRecEnv::predicted_relevant(int user, int item) const {
  return model_->predict(user, item) >= config_.relevance_threshold;
}

bool OfflineRecEnv::logged_relevant(int user, int item) const {
  const auto& log = (*logs_)[static_cast<std::size_t>(user)].ratings;
  auto it = log.find(item);
  return it != log.end() && it->second >= config_.relevance_threshold;
}

int OfflineRecEnv::relevant_item_count(int user) const {
  return (*logs_)[static_cast<std::size_t>(user)].relevant;
}

void OfflineRecEnv::rebuild_state() {
  state_.setZero();
  state_.segment(0, k_) = model_->user_factors.row(user_).transpose();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k_);
  int filled = 0;
  for (int slot = 0; slot < config_.history_len; ++slot) {
    const int item = history_[static_cast<std::size_t>(slot)];
    if (item < 0) continue;
    const Eigen::VectorXd f = model_->item_factors.row(item).transpose();
    state_.segment((2 + slot) * k_, k_) = f;
    mean += f;
    ++filled;
  }
  if (filled > 0) state_.segment(k_, k_) = mean / filled;
}

StateVec OfflineRecEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  user_ = std::uniform_int_distribution<int>(0, model_->n_users() - 1)(rng_);
  std::fill(shown_.begin(), shown_.end(), false);
  std::fill(history_.begin(), history_.end(), -1);
  last_item_ = -1;
  was_reset_ = true;
  rebuild_state();
  return state_;
}

StepResult OfflineRecEnv::step(const ActionVec& action) {
  require_reset();
  check_action(action);
  const int item = nearest_item(model_->item_factors, action, shown_);
  if (item < 0) throw StateMismatch("every item has already been recommended");
  shown_[static_cast<std::size_t>(item)] = true;
  last_item_ = item;
  const double reward = is_relevant(user_, item) ? 1.0 : 0.0;
  for (int slot = config_.history_len - 1; slot > 0; --slot) {
    history_[static_cast<std::size_t>(slot)] = history_[static_cast<std::size_t>(slot - 1)];
  }
  history_[0] = item;
  rebuild_state();
  const bool exhausted = std::find(shown_.begin(), shown_.end(), false) == shown_.end();
  return {state_, reward, exhausted};
}

void OfflineRecEnv::force_state(const StateVec& state) {
  require_reset();
  if (state.size() != state_dim()) throw DimensionError("forced state has the wrong length");
  state_ = state;
}

OfflineRecEnv make_offline_env(std::shared_ptr<const MfModel> model, const RatingsTable& table,
                               int history_len, std::uint64_t seed) {
  OfflineRecEnv env(std::move(model), table, OfflineEnvConfig{history_len, 4.0});
  env.reseed(seed);
  return env;
}

}  // namespace macs

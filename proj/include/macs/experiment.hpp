#pragma once

#include "macs/config.hpp"
#include "macs/mdp.hpp"
#include "macs/offline_env.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace macs {

struct MetricsRow {
  int episode = 0;
  std::int64_t steps = 0;
  // Mean training return over the episodes since the previous row.
  double avg_return = 0.0;
  double ctr = 0.0;
  double ctr_ma10 = 0.0;
  std::optional<double> kl;
  std::int64_t aug_count = 0;
  std::optional<double> eps1;
  std::optional<double> eps2;
  std::optional<double> wall_ms;
  std::uint64_t seed = 0;

  bool operator==(const MetricsRow&) const = default;
};

const std::string& metrics_header();
std::string to_csv_line(const MetricsRow& row);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Mean per-step reward over eval_episodes greedy episodes; episode j runs on a
// fresh copy of the prototype reset with derive_seed(seed, kEvaluation, j).
double evaluate_ctr(const Policy& policy, const Environment& prototype, int eval_episodes,
                    int max_steps, std::uint64_t seed,
                    std::vector<Trajectory>* trajectories = nullptr);

struct OfflineMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  int episodes = 0;
  // Episodes whose user holds no relevant item; their recall counts as 0.
  int degenerate_episodes = 0;
};

struct OfflineStep {
  int item = -1;
  bool relevant = false;            // reward was 1
  bool predicted_relevant = false;  // MF score reaches the threshold
  bool held_relevant = false;       // logged at or above the threshold
};

struct OfflineEpisode {
  std::vector<OfflineStep> steps;
  int relevant_items = 0;  // logged relevant items of the episode's user
};

// precision = relevant recommendations / recommendations (pooled); recall =
// distinct held-relevant items recommended / relevant_items, averaged over
// episodes; accuracy = pooled fraction of steps whose predicted relevance
// matches the reward.
OfflineMetrics offline_metrics_from_episodes(const std::vector<OfflineEpisode>& episodes);

OfflineMetrics evaluate_offline_metrics(const Policy& policy, const OfflineRecEnv& env,
                                        int eval_episodes, int max_steps, std::uint64_t seed);

// Builds the configured environment. The offline kind ingests the ratings file
// and trains the MF model first.
std::unique_ptr<Environment> make_environment(const EnvSpec& spec);

struct RunOptions {
  // Expert mode: load the expert from here instead of pre-training one.
  std::optional<std::string> expert_checkpoint;
  bool save_checkpoints = true;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  double final_ctr = 0.0;
  std::optional<OfflineMetrics> offline;
  std::string metrics_path;
};

struct ExperimentOutcome {
  std::vector<SeedOutcome> seeds;
  std::string aggregate_path;
};

// Per seed: metrics_seed<S>.csv, eval_seed<S>.csv (evaluation rewards),
// policy_seed<S>.ckpt and, when augmenting with MACS, counterfactual_seed<S>.ckpt.
// aggregate.csv holds the mean and population std of CTR per evaluation
// point across seeds. Files written by a failed run are removed.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct SweepRow {
  int hidden = 0;
  double mean_final_ctr = 0.0;
  double std_final_ctr = 0.0;
  int runs = 0;
  bool best = false;
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  int best_hidden = 0;
  std::string aggregate_path;
};

// One experiment per hidden width (output in <output_dir>/hidden_<h>), then
// <output_dir>/sweep.csv with the mean and population std of the per-seed final
// CTRs. The first width with the highest mean is marked best.
SweepOutcome sweep_hidden_sizes(const ExperimentConfig& base,
                                const std::vector<int>& sizes = {64, 128, 256});

// Population standard deviation.
double population_std(const std::vector<double>& xs);

// Identifies the experiment; the output directory does not contribute.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace macs

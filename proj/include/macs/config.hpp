#pragma once

#include "macs/agent.hpp"
#include "macs/macs_training.hpp"
#include "macs/matrix_factorization.hpp"
#include "macs/offline_env.hpp"
#include "macs/synthrec.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace macs {

struct EnvSpec {
  std::string kind;  // "synthrec" or "offline"
  SynthRecConfig synthrec;
  // Offline only.
  std::string ratings;
  MfParams mf;
  OfflineEnvConfig offline;

  bool operator==(const EnvSpec&) const = default;
};

struct ScheduleSpec {
  int episodes = 100;
  int max_steps = 20;
  int eval_every = 10;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";
  // Off by default so metric files stay byte-identical across reruns.
  bool record_wall_clock = false;
  bool log_eval_trajectories = true;

  bool operator==(const ScheduleSpec&) const = default;
};

struct ExperimentConfig {
  EnvSpec env;
  Variant variant = Variant::DDPG;
  AgentConfig agent;
  MacsConfig macs;
  AugmentMode mode = AugmentMode::Off;
  double mask_prob = 0.2;
  // Expert mode: episodes used to pre-train the expert.
  int expert_episodes = 300;
  ScheduleSpec schedule;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Sectioned "key = value" text ([env], [agent], [macs], [schedule]); '#' starts
// a comment. env.kind and agent.variant are required, everything else has a
// default. Errors are ConfigError naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config_file(const std::string& path);

// Every key with its effective value; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

}  // namespace macs

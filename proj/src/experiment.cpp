#include "macs/experiment.hpp"

#include "macs/error.hpp"
#include "macs/format.hpp"
#include "macs/macs_training.hpp"
#include "macs/matrix_factorization.hpp"
#include "macs/ratings.hpp"
#include "macs/synthrec.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace macs {

const std::string& metrics_header() {
  static const std::string header =
      "episode,steps,avg_return,ctr,ctr_ma10,kl,aug_count,eps1,eps2,wall_ms,seed";
  return header;
}

namespace {

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> read_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Files created during a run; removed again unless the run completes.
class OutputGuard {
 public:
  std::ofstream open(const fs::path& path) {
    created_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
  }
  void track(const fs::path& path) { created_.push_back(path); }
  void commit() { created_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto& p : created_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> created_;
};

void write_text(OutputGuard& guard, const fs::path& path, const std::string& text) {
  auto out = guard.open(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string seed_file(const char* stem, std::uint64_t seed, const char* ext) {
  return std::string(stem) + "_seed" + std::to_string(seed) + ext;
}

}  // namespace

std::string to_csv_line(const MetricsRow& r) {
  std::ostringstream out;
  out << r.episode << ',' << r.steps << ',' << format_double(r.avg_return) << ','
      << format_double(r.ctr) << ',' << format_double(r.ctr_ma10) << ',' << optional_field(r.kl)
      << ',' << r.aug_count << ',' << optional_field(r.eps1) << ',' << optional_field(r.eps2)
      << ',' << optional_field(r.wall_ms) << ',' << r.seed;
  return out.str();
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != metrics_header()) {
    throw ParseError(1, "unexpected metrics header in " + path);
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) throw ParseError(line_no, "expected 11 fields");
    MetricsRow r;
    r.episode = std::stoi(f[0]);
    r.steps = std::stoll(f[1]);
    r.avg_return = std::stod(f[2]);
    r.ctr = std::stod(f[3]);
    r.ctr_ma10 = std::stod(f[4]);
    r.kl = read_optional(f[5]);
    r.aug_count = std::stoll(f[6]);
    r.eps1 = read_optional(f[7]);
    r.eps2 = read_optional(f[8]);
    r.wall_ms = read_optional(f[9]);
    r.seed = std::stoull(f[10]);
    rows.push_back(r);
  }
  return rows;
}

double evaluate_ctr(const Policy& policy, const Environment& prototype, int eval_episodes,
                    int max_steps, std::uint64_t seed, std::vector<Trajectory>* trajectories) {
  if (eval_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  double reward = 0.0;
  std::int64_t steps = 0;
  for (int j = 0; j < eval_episodes; ++j) {
    auto env = prototype.branch();
    Trajectory t = run_episode(*env, policy, max_steps,
                               derive_seed(seed, streams::kEvaluation, static_cast<std::uint64_t>(j)));
    reward += t.total_reward();
    steps += static_cast<std::int64_t>(t.transitions.size());
    if (trajectories) trajectories->push_back(std::move(t));
  }
  return steps > 0 ? reward / static_cast<double>(steps) : 0.0;
}

OfflineMetrics offline_metrics_from_episodes(const std::vector<OfflineEpisode>& episodes) {
  OfflineMetrics m;
  std::int64_t steps = 0, hits = 0, agree = 0;
  double recall_sum = 0.0;
  for (const auto& ep : episodes) {
    std::set<int> found;
    for (const auto& s : ep.steps) {
      ++steps;
      if (s.relevant) ++hits;
      if (s.predicted_relevant == s.relevant) ++agree;
      if (s.held_relevant) found.insert(s.item);
    }
    if (ep.relevant_items > 0) {
      recall_sum += std::min(1.0, static_cast<double>(found.size()) / ep.relevant_items);
    } else {
      ++m.degenerate_episodes;
    }
    ++m.episodes;
  }
  if (steps > 0) {
    m.precision = static_cast<double>(hits) / static_cast<double>(steps);
    m.accuracy = static_cast<double>(agree) / static_cast<double>(steps);
  }
  if (m.episodes > 0) m.recall = recall_sum / m.episodes;
  return m;
}

OfflineMetrics evaluate_offline_metrics(const Policy& policy, const OfflineRecEnv& env,
                                        int eval_episodes, int max_steps, std::uint64_t seed) {
  if (eval_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  std::vector<OfflineEpisode> episodes;
  for (int j = 0; j < eval_episodes; ++j) {
    OfflineRecEnv copy = env;
    copy.reset(derive_seed(seed, streams::kEvaluation, static_cast<std::uint64_t>(j)));
    OfflineEpisode ep;
    const int user = copy.current_user();
    ep.relevant_items = copy.relevant_item_count(user);
    for (int t = 0; t < max_steps; ++t) {
      const StepResult r = copy.step(policy(copy.state()));
      const int item = copy.last_item();
      ep.steps.push_back({item, r.reward > 0.5, copy.predicted_relevant(user, item),
                          copy.logged_relevant(user, item)});
      if (r.terminal) break;
    }
    episodes.push_back(std::move(ep));
  }
  return offline_metrics_from_episodes(episodes);
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  if (spec.kind == "synthrec") return std::make_unique<SynthRecEnv>(spec.synthrec);
  if (spec.kind == "offline") {
    const RatingsTable table = ingest_ratings_file(spec.ratings);
    auto model = std::make_shared<const MfModel>(train_mf(table, spec.mf).model);
    return std::make_unique<OfflineRecEnv>(model, table, spec.offline);
  }
  throw ConfigError("env.kind must be synthrec or offline");
}

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // FNV-1a over the effective config text, output location excluded.
  ExperimentConfig c = config;
  c.schedule.output_dir.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : emit_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

SeedOutcome run_seed(const ExperimentConfig& config, const RunOptions& options,
                     const Environment& prototype, std::uint64_t seed, const fs::path& dir,
                     OutputGuard& guard) {
  const auto& sched = config.schedule;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t hash = config_hash(config);

  TrainSpec spec;
  spec.variant = config.variant;
  spec.agent = config.agent;
  spec.macs = config.macs;
  spec.mode = config.mode;
  spec.mask_prob = config.mask_prob;
  spec.episodes = sched.episodes;
  spec.max_steps = sched.max_steps;
  spec.seed = seed;

  std::optional<CounterfactualPolicy> frozen;
  std::optional<double> expert_kl;
  if (config.mode == AugmentMode::Expert) {
    std::optional<ActorCriticAgent> expert;
    if (options.expert_checkpoint) {
      expert = ActorCriticAgent::load_file(*options.expert_checkpoint, config.agent);
      if (expert->state_dim() != prototype.state_dim() ||
          expert->action_dim() != prototype.action_dim()) {
        throw DimensionError("expert checkpoint does not match the environment");
      }
    } else {
      TrainSpec pre = spec;
      pre.mode = AugmentMode::Off;
      pre.episodes = config.expert_episodes;
      pre.seed = derive_seed(seed, streams::kExpertPretrain);
      expert = train_recommender(prototype, pre).policy;
      if (options.save_checkpoints) {
        const fs::path p = dir / seed_file("expert", seed, ".ckpt");
        guard.track(p);
        expert->save_file(p.string(), {hash, static_cast<std::uint64_t>(pre.episodes), "expert"});
      }
    }
    CfTrainingReport report;
    frozen = train_macs_expert(*expert, prototype, config.agent, config.macs, sched.max_steps,
                               seed, &report);
    expert_kl = report.final_kl;
  }

  SeedOutcome outcome;
  outcome.seed = seed;
  std::ostringstream eval_log;
  eval_log << "episode,eval_episode,step,reward\n";
  std::deque<double> recent_ctr;
  std::vector<double> returns_since_row;

  auto on_episode = [&](const EpisodeSummary& s, const ActorCriticAgent& agent) {
    returns_since_row.push_back(s.train_return);
    if (s.episode % sched.eval_every != 0) return;
    const Policy greedy = [&agent](const StateVec& st) { return agent.greedy_action(st); };
    std::vector<Trajectory> trajectories;
    MetricsRow row;
    row.episode = s.episode;
    row.steps = s.env_steps;
    row.avg_return = mean_of(returns_since_row);
    returns_since_row.clear();
    row.ctr = evaluate_ctr(greedy, prototype, sched.eval_episodes, sched.max_steps, seed,
                           &trajectories);
    recent_ctr.push_back(row.ctr);
    if (recent_ctr.size() > 10) recent_ctr.pop_front();
    row.ctr_ma10 = std::accumulate(recent_ctr.begin(), recent_ctr.end(), 0.0) /
                   static_cast<double>(recent_ctr.size());
    row.kl = config.mode == AugmentMode::Expert ? expert_kl : s.kl;
    row.aug_count = s.aug_count;
    row.eps1 = s.eps1;
    row.eps2 = s.eps2;
    if (sched.record_wall_clock) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
    }
    row.seed = seed;
    outcome.rows.push_back(row);
    if (sched.log_eval_trajectories) {
      for (std::size_t j = 0; j < trajectories.size(); ++j) {
        const auto& tr = trajectories[j].transitions;
        for (std::size_t t = 0; t < tr.size(); ++t) {
          eval_log << s.episode << ',' << j << ',' << t << ',' << format_double(tr[t].reward)
                   << '\n';
        }
      }
    }
  };

  TrainResult result = train_recommender(prototype, spec, frozen, on_episode);

  if (!outcome.rows.empty()) {
    outcome.final_ctr = outcome.rows.back().ctr;
  } else {
    const Policy greedy = [&result](const StateVec& st) {
      return result.policy.greedy_action(st);
    };
    outcome.final_ctr =
        evaluate_ctr(greedy, prototype, sched.eval_episodes, sched.max_steps, seed);
  }

  std::ostringstream csv;
  csv << metrics_header() << '\n';
  for (const auto& row : outcome.rows) csv << to_csv_line(row) << '\n';
  const fs::path metrics_path = dir / seed_file("metrics", seed, ".csv");
  write_text(guard, metrics_path, csv.str());
  outcome.metrics_path = metrics_path.string();
  if (sched.log_eval_trajectories) {
    write_text(guard, dir / seed_file("eval", seed, ".csv"), eval_log.str());
  }

  if (const auto* offline = dynamic_cast<const OfflineRecEnv*>(&prototype)) {
    const Policy greedy = [&result](const StateVec& st) {
      return result.policy.greedy_action(st);
    };
    const OfflineMetrics m =
        evaluate_offline_metrics(greedy, *offline, sched.eval_episodes, sched.max_steps, seed);
    outcome.offline = m;
    std::ostringstream o;
    o << "precision,recall,accuracy,episodes,degenerate_episodes\n"
      << format_double(m.precision) << ',' << format_double(m.recall) << ','
      << format_double(m.accuracy) << ',' << m.episodes << ',' << m.degenerate_episodes << '\n';
    write_text(guard, dir / seed_file("offline", seed, ".csv"), o.str());
  }

  if (options.save_checkpoints) {
    const fs::path p = dir / seed_file("policy", seed, ".ckpt");
    guard.track(p);
    result.policy.save_file(p.string(), {hash, static_cast<std::uint64_t>(sched.episodes),
                                         "policy:" + to_string(config.variant)});
    if (result.counterfactual) {
      const fs::path c = dir / seed_file("counterfactual", seed, ".ckpt");
      guard.track(c);
      result.counterfactual->save_file(c.string(), static_cast<std::uint64_t>(sched.episodes));
    }
  }
  return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path dir(config.schedule.output_dir);
  fs::create_directories(dir);
  const auto prototype = make_environment(config.env);

  OutputGuard guard;
  ExperimentOutcome outcome;
  write_text(guard, dir / "config.effective", emit_config(config));
  for (std::uint64_t seed : config.schedule.seeds) {
    outcome.seeds.push_back(run_seed(config, options, *prototype, seed, dir, guard));
  }

  std::ostringstream agg;
  agg << "episode,ctr_mean,ctr_std,seeds\n";
  const std::size_t n_rows = outcome.seeds.front().rows.size();
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::vector<double> ctrs;
    for (const auto& s : outcome.seeds) ctrs.push_back(s.rows[i].ctr);
    agg << outcome.seeds.front().rows[i].episode << ',' << format_double(mean_of(ctrs)) << ','
        << format_double(population_std(ctrs)) << ',' << ctrs.size() << '\n';
  }
  const fs::path agg_path = dir / "aggregate.csv";
  write_text(guard, agg_path, agg.str());
  outcome.aggregate_path = agg_path.string();
  guard.commit();
  return outcome;
}

SweepOutcome sweep_hidden_sizes(const ExperimentConfig& base, const std::vector<int>& sizes) {
  if (sizes.empty()) throw ConfigError("sweep needs at least one hidden size");
  base.validate();
  const fs::path root(base.schedule.output_dir);
  fs::create_directories(root);
  SweepOutcome outcome;
  for (int h : sizes) {
    ExperimentConfig c = base;
    c.agent.hidden = h;
    c.schedule.output_dir = (root / ("hidden_" + std::to_string(h))).string();
    const ExperimentOutcome run = run_experiment(c);
    std::vector<double> finals;
    for (const auto& s : run.seeds) finals.push_back(s.final_ctr);
    outcome.rows.push_back({h, mean_of(finals), population_std(finals),
                            static_cast<int>(finals.size()), false});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcome.rows.size(); ++i) {
    if (outcome.rows[i].mean_final_ctr > outcome.rows[best].mean_final_ctr) best = i;
  }
  outcome.rows[best].best = true;
  outcome.best_hidden = outcome.rows[best].hidden;

  OutputGuard guard;
  std::ostringstream out;
  out << "hidden,mean_final_ctr,std_final_ctr,runs,best\n";
  for (const auto& r : outcome.rows) {
    out << r.hidden << ',' << format_double(r.mean_final_ctr) << ','
        << format_double(r.std_final_ctr) << ',' << r.runs << ',' << (r.best ? 1 : 0) << '\n';
  }
  const fs::path path = root / "sweep.csv";
  write_text(guard, path, out.str());
  guard.commit();
  outcome.aggregate_path = path.string();
  return outcome;
}

}  // namespace macs

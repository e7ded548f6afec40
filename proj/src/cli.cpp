#include "macs/cli.hpp"

#include "macs/agent.hpp"
#include "macs/config.hpp"
#include "macs/error.hpp"
#include "macs/experiment.hpp"
#include "macs/format.hpp"
#include "macs/ratings.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <optional>

namespace macs {

namespace {

constexpr const char* kUsage =
    "usage: macs <command> [options]\n"
    "commands:\n"
    "  train        --config PATH [--seed N] [--out DIR]\n"
    "  train-macs   --config PATH --expert CKPT [--seed N] [--out DIR]\n"
    "  joint-train  --config PATH [--seed N] [--out DIR]\n"
    "  eval         --config PATH --checkpoint CKPT [--seed N]\n"
    "  ingest       --ratings PATH\n"
    "  sweep        --config PATH [--sizes 64,128,256] [--seed N] [--out DIR]\n"
    "MACS_OUT overrides --out.\n";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig config = parse_config_file(c.config);
  if (c.seed) config.schedule.seeds = {*c.seed};
  if (!c.out.empty()) config.schedule.output_dir = c.out;
  if (const char* env = std::getenv("MACS_OUT"); env && *env) config.schedule.output_dir = env;
  return config;
}

void report(std::ostream& out, const ExperimentOutcome& o) {
  for (const auto& s : o.seeds) {
    out << "seed " << s.seed << ": final ctr " << format_double(s.final_ctr) << " -> "
        << s.metrics_path << '\n';
    if (s.offline) {
      out << "  precision " << format_double(s.offline->precision) << " recall "
          << format_double(s.offline->recall) << " accuracy "
          << format_double(s.offline->accuracy) << '\n';
    }
  }
  out << "aggregate: " << o.aggregate_path << '\n';
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << kUsage;
    return 1;
  }
  CLI::App app{"MACS experiment harness", "macs"};
  app.require_subcommand(1);

  Common train_opts, macs_opts, joint_opts, eval_opts, sweep_opts;
  auto add_common = [](CLI::App* sub, Common& c, bool with_out) {
    sub->add_option("--config", c.config, "experiment config file")->required();
    sub->add_option("--seed", c.seed, "run a single seed");
    if (with_out) sub->add_option("--out", c.out, "output directory");
  };
  auto* train = app.add_subcommand("train", "plain or augmented training per config");
  add_common(train, train_opts, true);
  auto* train_macs = app.add_subcommand("train-macs", "expert-mode training from a checkpoint");
  add_common(train_macs, macs_opts, true);
  std::string expert_path;
  train_macs->add_option("--expert", expert_path, "expert policy checkpoint")->required();
  auto* joint = app.add_subcommand("joint-train", "three-stage joint training");
  add_common(joint, joint_opts, true);
  auto* eval = app.add_subcommand("eval", "evaluate a policy checkpoint");
  add_common(eval, eval_opts, false);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  auto* ingest = app.add_subcommand("ingest", "validate a ratings file");
  std::string ratings;
  ingest->add_option("--ratings,ratings", ratings, "ratings file")->required();
  auto* sweep = app.add_subcommand("sweep", "hidden-size sweep");
  add_common(sweep, sweep_opts, true);
  std::vector<int> sizes{64, 128, 256};
  sweep->add_option("--sizes", sizes, "hidden widths")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help() << kUsage;
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << kUsage;
    return 1;
  }

  try {
    if (*train) {
      report(out, run_experiment(load(train_opts)));
    } else if (*train_macs) {
      ExperimentConfig c = load(macs_opts);
      c.mode = AugmentMode::Expert;
      RunOptions options;
      options.expert_checkpoint = expert_path;
      report(out, run_experiment(c, options));
    } else if (*joint) {
      ExperimentConfig c = load(joint_opts);
      c.mode = AugmentMode::Joint;
      report(out, run_experiment(c));
    } else if (*eval) {
      const ExperimentConfig c = load(eval_opts);
      const ActorCriticAgent agent = ActorCriticAgent::load_file(checkpoint, c.agent);
      const auto env = make_environment(c.env);
      if (agent.state_dim() != env->state_dim() || agent.action_dim() != env->action_dim()) {
        throw DimensionError("checkpoint does not match the configured environment");
      }
      const Policy greedy = [&agent](const StateVec& s) { return agent.greedy_action(s); };
      for (std::uint64_t seed : c.schedule.seeds) {
        const double ctr = evaluate_ctr(greedy, *env, c.schedule.eval_episodes,
                                        c.schedule.max_steps, seed);
        out << "seed " << seed << ": ctr " << format_double(ctr) << '\n';
        if (const auto* offline = dynamic_cast<const OfflineRecEnv*>(env.get())) {
          const OfflineMetrics m = evaluate_offline_metrics(greedy, *offline,
                                                            c.schedule.eval_episodes,
                                                            c.schedule.max_steps, seed);
          out << "  precision " << format_double(m.precision) << " recall "
              << format_double(m.recall) << " accuracy " << format_double(m.accuracy) << '\n';
        }
      }
    } else if (*ingest) {
      const RatingsTable table = ingest_ratings_file(ratings);
      out << "records " << table.size() << "\nusers " << table.n_users() << "\nitems "
          << table.n_items() << '\n';
    } else if (*sweep) {
      const SweepOutcome s = sweep_hidden_sizes(load(sweep_opts), sizes);
      for (const auto& r : s.rows) {
        out << "hidden " << r.hidden << ": mean " << format_double(r.mean_final_ctr) << " std "
            << format_double(r.std_final_ctr) << (r.best ? "  <- best" : "") << '\n';
      }
      out << "aggregate: " << s.aggregate_path << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace macs

#include "macs/config.hpp"

#include "macs/error.hpp"
#include "macs/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace macs {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "+inf") return std::numeric_limits<double>::infinity();
  if (value == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || std::isnan(out)) bad_value(key, value, "a number");
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "true or false");
}

std::optional<double> parse_auto_real(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  return parse_real(key, value);
}

std::optional<bool> parse_auto_flag(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  return parse_flag(key, value);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    seeds.push_back(parse_integer<std::uint64_t>(key, trim(item)));
  }
  if (seeds.empty()) bad_value(key, value, "a comma-separated list of seeds");
  return seeds;
}

std::string flag_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string& name, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// `ref` maps a config (const or not) to the field it owns.
template <class Ref>
Field int_field(std::string s, std::string k, Ref ref) {
  return {std::move(s), std::move(k),
          [ref](ExperimentConfig& c, const std::string& n, const std::string& v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            ref(c) = parse_integer<T>(n, v);
          },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(c)); }};
}

template <class Ref>
Field real_field(std::string s, std::string k, Ref ref) {
  return {std::move(s), std::move(k),
          [ref](ExperimentConfig& c, const std::string& n, const std::string& v) {
            ref(c) = parse_real(n, v);
          },
          [ref](const ExperimentConfig& c) { return format_double(ref(c)); }};
}

template <class Ref>
Field auto_real_field(std::string s, std::string k, Ref ref) {
  return {std::move(s), std::move(k),
          [ref](ExperimentConfig& c, const std::string& n, const std::string& v) {
            ref(c) = parse_auto_real(n, v);
          },
          [ref](const ExperimentConfig& c) -> std::string {
            const auto& v = ref(c);
            return v ? format_double(*v) : "auto";
          }};
}

template <class Ref>
Field flag_field(std::string s, std::string k, Ref ref) {
  return {std::move(s), std::move(k),
          [ref](ExperimentConfig& c, const std::string& n, const std::string& v) {
            ref(c) = parse_flag(n, v);
          },
          [ref](const ExperimentConfig& c) { return flag_text(ref(c)); }};
}

template <class Ref>
Field text_field(std::string s, std::string k, Ref ref) {
  return {std::move(s), std::move(k),
          [ref](ExperimentConfig& c, const std::string&, const std::string& v) { ref(c) = v; },
          [ref](const ExperimentConfig& c) { return ref(c); }};
}

#define MACS_REF(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"env", "kind",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   if (v != "synthrec" && v != "offline") bad_value(n, v, "synthrec or offline");
                   c.env.kind = v;
                 },
                 [](const ExperimentConfig& c) { return c.env.kind; }});
    f.push_back(int_field("env", "n_static", MACS_REF(env.synthrec.n_static)));
    f.push_back(int_field("env", "n_dynamic", MACS_REF(env.synthrec.n_dynamic)));
    f.push_back(int_field("env", "item_dim", MACS_REF(env.synthrec.item_dim)));
    f.push_back(int_field("env", "history_len", MACS_REF(env.synthrec.history_len)));
    f.push_back(int_field("env", "essential_static_count",
                          MACS_REF(env.synthrec.essential_static_count)));
    f.push_back(real_field("env", "drift_rate", MACS_REF(env.synthrec.drift_rate)));
    f.push_back(real_field("env", "click_weight_scale", MACS_REF(env.synthrec.click_weight_scale)));
    f.push_back(
        real_field("env", "history_weight_scale", MACS_REF(env.synthrec.history_weight_scale)));
    f.push_back(int_field("env", "world_seed", MACS_REF(env.synthrec.seed)));
    f.push_back(text_field("env", "ratings", MACS_REF(env.ratings)));
    f.push_back(int_field("env", "mf_k", MACS_REF(env.mf.k)));
    f.push_back(int_field("env", "mf_epochs", MACS_REF(env.mf.epochs)));
    f.push_back(real_field("env", "mf_lr", MACS_REF(env.mf.lr)));
    f.push_back(real_field("env", "mf_reg", MACS_REF(env.mf.reg)));
    f.push_back(real_field("env", "mf_holdout_frac", MACS_REF(env.mf.holdout_frac)));
    f.push_back(real_field("env", "mf_init_scale", MACS_REF(env.mf.init_scale)));
    f.push_back(int_field("env", "mf_seed", MACS_REF(env.mf.seed)));
    f.push_back(int_field("env", "offline_history_len", MACS_REF(env.offline.history_len)));
    f.push_back(
        real_field("env", "relevance_threshold", MACS_REF(env.offline.relevance_threshold)));

    f.push_back({"agent", "variant",
                 [](ExperimentConfig& c, const std::string&, const std::string& v) {
                   c.variant = parse_variant(v);
                 },
                 [](const ExperimentConfig& c) { return to_string(c.variant); }});
    f.push_back(real_field("agent", "gamma", MACS_REF(agent.gamma)));
    f.push_back(real_field("agent", "tau", MACS_REF(agent.tau)));
    f.push_back(int_field("agent", "batch_size", MACS_REF(agent.batch_size)));
    f.push_back(int_field("agent", "buffer_capacity", MACS_REF(agent.buffer_capacity)));
    f.push_back(int_field("agent", "hidden", MACS_REF(agent.hidden)));
    f.push_back(real_field("agent", "explore_sigma", MACS_REF(agent.explore_sigma)));
    f.push_back(real_field("agent", "sac_alpha", MACS_REF(agent.sac_alpha)));
    f.push_back(int_field("agent", "policy_delay", MACS_REF(agent.policy_delay)));
    f.push_back(real_field("agent", "target_noise", MACS_REF(agent.target_noise)));
    f.push_back(real_field("agent", "noise_clip", MACS_REF(agent.noise_clip)));
    f.push_back(real_field("agent", "actor_lr", MACS_REF(agent.actor_lr)));
    f.push_back(real_field("agent", "critic_lr", MACS_REF(agent.critic_lr)));
    f.push_back(int_field("agent", "warmup_steps", MACS_REF(agent.warmup_steps)));
    f.push_back({"agent", "random_warmup",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.agent.random_warmup = parse_auto_flag(n, v);
                 },
                 [](const ExperimentConfig& c) -> std::string {
                   return c.agent.random_warmup ? flag_text(*c.agent.random_warmup) : "auto";
                 }});

    f.push_back({"macs", "mode",
                 [](ExperimentConfig& c, const std::string&, const std::string& v) {
                   c.mode = parse_augment_mode(v);
                 },
                 [](const ExperimentConfig& c) { return to_string(c.mode); }});
    f.push_back(real_field("macs", "eps", MACS_REF(macs.eps)));
    f.push_back(real_field("macs", "lambda_base", MACS_REF(macs.lambda_base)));
    f.push_back(auto_real_field("macs", "eps1", MACS_REF(macs.eps1)));
    f.push_back(auto_real_field("macs", "eps2", MACS_REF(macs.eps2)));
    f.push_back(auto_real_field("macs", "delta1", MACS_REF(macs.delta1)));
    f.push_back(auto_real_field("macs", "delta2", MACS_REF(macs.delta2)));
    f.push_back(int_field("macs", "max_cf_episodes", MACS_REF(macs.max_cf_episodes)));
    f.push_back(int_field("macs", "average_window", MACS_REF(macs.average_window)));
    f.push_back(int_field("macs", "qualify_episodes", MACS_REF(macs.qualify_episodes)));
    f.push_back(int_field("macs", "bins", MACS_REF(macs.estimator.bin_count)));
    f.push_back(real_field("macs", "smoothing", MACS_REF(macs.estimator.smoothing)));
    f.push_back(int_field("macs", "window", MACS_REF(macs.estimator.window)));
    f.push_back(int_field("macs", "warm_up", MACS_REF(macs.estimator.warm_up)));
    f.push_back({"macs", "cf_variant",
                 [](ExperimentConfig& c, const std::string&, const std::string& v) {
                   c.macs.cf_variant = parse_variant(v);
                 },
                 [](const ExperimentConfig& c) { return to_string(c.macs.cf_variant); }});
    f.push_back(real_field("macs", "cf_gamma", MACS_REF(macs.cf_gamma)));
    f.push_back(real_field("macs", "mask_prob", MACS_REF(mask_prob)));
    f.push_back(int_field("macs", "expert_episodes", MACS_REF(expert_episodes)));

    f.push_back(int_field("schedule", "episodes", MACS_REF(schedule.episodes)));
    f.push_back(int_field("schedule", "max_steps", MACS_REF(schedule.max_steps)));
    f.push_back(int_field("schedule", "eval_every", MACS_REF(schedule.eval_every)));
    f.push_back(int_field("schedule", "eval_episodes", MACS_REF(schedule.eval_episodes)));
    f.push_back({"schedule", "seeds",
                 [](ExperimentConfig& c, const std::string& n, const std::string& v) {
                   c.schedule.seeds = parse_seed_list(n, v);
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.schedule.seeds.size(); ++i) {
                     if (i) out += ", ";
                     out += std::to_string(c.schedule.seeds[i]);
                   }
                   return out;
                 }});
    f.push_back(text_field("schedule", "output_dir", MACS_REF(schedule.output_dir)));
    f.push_back(flag_field("schedule", "record_wall_clock", MACS_REF(schedule.record_wall_clock)));
    f.push_back(
        flag_field("schedule", "log_eval_trajectories", MACS_REF(schedule.log_eval_trajectories)));
    return f;
  }();
  return table;
}

#undef MACS_REF

const std::vector<std::string> kSections{"env", "agent", "macs", "schedule"};

}  // namespace

void ExperimentConfig::validate() const {
  if (env.kind == "synthrec") {
    env.synthrec.validate();
  } else if (env.kind == "offline") {
    if (env.ratings.empty()) throw ConfigError("env.ratings is required for the offline env");
    if (env.mf.k < 1 || env.mf.epochs < 0) throw ConfigError("env.mf_k must be positive");
    if (!(env.mf.holdout_frac >= 0.0 && env.mf.holdout_frac < 1.0)) {
      throw ConfigError("env.mf_holdout_frac must lie in [0, 1)");
    }
    if (env.offline.history_len < 1) throw ConfigError("env.offline_history_len must be positive");
  } else {
    throw ConfigError("env.kind must be synthrec or offline");
  }
  agent.validate();
  macs.validate();
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ConfigError("macs.mask_prob must lie in [0, 1]");
  if (expert_episodes < 1) throw ConfigError("macs.expert_episodes must be positive");
  if (schedule.episodes < 0) throw ConfigError("schedule.episodes must be non-negative");
  if (schedule.max_steps < 1) throw ConfigError("schedule.max_steps must be positive");
  if (schedule.eval_every < 1) throw ConfigError("schedule.eval_every must be positive");
  if (schedule.eval_episodes < 1) throw ConfigError("schedule.eval_episodes must be positive");
  if (schedule.seeds.empty()) throw ConfigError("schedule.seeds must not be empty");
  if (schedule.output_dir.empty()) throw ConfigError("schedule.output_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, const Field*> by_name;
  for (const auto& f : fields()) by_name[f.section + "." + f.key] = &f;

  ExperimentConfig config;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' appears before any section");
    const std::string name = section + "." + key;
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError(where + "unknown key " + name);
    if (!seen.insert(name).second) throw ConfigError(where + "duplicate key " + name);
    it->second->set(config, name, value);
  }
  for (const char* required : {"env.kind", "agent.variant"}) {
    if (!seen.count(required)) throw ConfigError(std::string("missing required key ") + required);
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string emit_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& section : kSections) {
    if (section != kSections.front()) out << '\n';
    out << '[' << section << "]\n";
    for (const auto& f : fields()) {
      if (f.section == section) out << f.key << " = " << f.get(config) << '\n';
    }
  }
  return out.str();
}

}  // namespace macs

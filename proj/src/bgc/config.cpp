// Copyright 2026 The BGC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bgc/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bgc/errors.hpp"

namespace bgc::config {
namespace {

struct Field {
  std::string key;  // "section.name"
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError(key + ": cannot parse '" + value + "' as " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad_value(key, value, expected);
  return out;
}

template <typename T>
std::string format_number(T v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean (true|false)");
}

// Member-pointer chains get verbose; small lambdas keep the table readable.
#define BGC_FIELD(KEY, EXPR, TYPE, DESC)                                                   \
  Field {                                                                                  \
    KEY, [](ExperimentConfig& c, const std::string& v) { EXPR = parse_number<TYPE>(KEY, v, DESC); }, \
        [](const ExperimentConfig& c) { return format_number<TYPE>(EXPR); }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f = {
        BGC_FIELD("env.grid_width", c.env.grid_width, int, "an integer"),
        BGC_FIELD("env.grid_height", c.env.grid_height, int, "an integer"),
        BGC_FIELD("env.n_allies", c.env.n_allies, int, "an integer"),
        BGC_FIELD("env.n_enemies", c.env.n_enemies, int, "an integer"),
        BGC_FIELD("env.sight_range", c.env.sight_range, double, "a number"),
        BGC_FIELD("env.attack_range", c.env.attack_range, double, "a number"),
        BGC_FIELD("env.ally_hp", c.env.ally_hp, int, "an integer"),
        BGC_FIELD("env.enemy_hp", c.env.enemy_hp, int, "an integer"),
        BGC_FIELD("env.damage", c.env.damage, int, "an integer"),
        BGC_FIELD("env.max_steps", c.env.max_steps, int, "an integer"),
        BGC_FIELD("env.seed", c.env.seed, std::uint64_t, "an unsigned integer"),
        BGC_FIELD("env.ally_clusters", c.env.ally_clusters, int, "an integer"),
        Field{"model.agent",
              [](ExperimentConfig& c, const std::string& v) {
                if (v == "bgc") c.model.agent = agent::AgentKind::kBelief;
                else if (v == "rnn") c.model.agent = agent::AgentKind::kRecurrent;
                else bad_value("model.agent", v, "one of bgc|rnn");
              },
              [](const ExperimentConfig& c) {
                return std::string(c.model.agent == agent::AgentKind::kBelief ? "bgc" : "rnn");
              }},
        Field{"model.mixer",
              [](ExperimentConfig& c, const std::string& v) {
                if (v == "qmix") c.model.mixer = mixers::MixerKind::kQmix;
                else if (v == "vdn") c.model.mixer = mixers::MixerKind::kVdn;
                else bad_value("model.mixer", v, "one of qmix|vdn");
              },
              [](const ExperimentConfig& c) {
                return std::string(c.model.mixer == mixers::MixerKind::kQmix ? "qmix" : "vdn");
              }},
        BGC_FIELD("model.hidden_dim", c.model.hidden_dim, int, "an integer"),
        BGC_FIELD("model.embed_dim", c.model.embed_dim, int, "an integer"),
        BGC_FIELD("model.group_dim", c.model.group_dim, int, "an integer"),
        BGC_FIELD("model.individual_dim", c.model.individual_dim, int, "an integer"),
        BGC_FIELD("model.knn_k", c.model.knn_k, int, "an integer"),
        BGC_FIELD("model.gat_layers", c.model.gat_layers, int, "an integer"),
        Field{"model.gat_value_projection",
              [](ExperimentConfig& c, const std::string& v) {
                c.model.gat_value_projection = parse_bool("model.gat_value_projection", v);
              },
              [](const ExperimentConfig& c) {
                return std::string(c.model.gat_value_projection ? "true" : "false");
              }},
        BGC_FIELD("model.gat_dropout", c.model.gat_dropout, double, "a number"),
        BGC_FIELD("model.leaky_relu_slope", c.model.leaky_relu_slope, double, "a number"),
        BGC_FIELD("model.hypernet_dim", c.model.hypernet_dim, int, "an integer"),
        BGC_FIELD("model.mixer_layers", c.model.mixer_layers, int, "an integer"),
        BGC_FIELD("loss.delta", c.loss.delta, double, "a number"),
        BGC_FIELD("loss.lambda_split", c.loss.lambda_split, double, "a number"),
        BGC_FIELD("loss.lambda_distill", c.loss.lambda_distill, double, "a number"),
        BGC_FIELD("loss.gamma", c.loss.gamma, double, "a number"),
        BGC_FIELD("training.buffer_capacity", c.training.buffer_capacity, int, "an integer"),
        BGC_FIELD("training.batch_size", c.training.batch_size, int, "an integer"),
        BGC_FIELD("training.workers", c.training.workers, int, "an integer"),
        BGC_FIELD("training.reward_scale", c.training.reward_scale, double, "a number"),
        BGC_FIELD("training.total_env_steps", c.training.total_env_steps, std::int64_t,
                  "an integer"),
        BGC_FIELD("training.epsilon_start", c.training.epsilon_start, double, "a number"),
        BGC_FIELD("training.epsilon_finish", c.training.epsilon_finish, double, "a number"),
        BGC_FIELD("training.epsilon_anneal_steps", c.training.epsilon_anneal_steps,
                  std::int64_t, "an integer"),
        BGC_FIELD("training.target_update_interval", c.training.target_update_interval, int,
                  "an integer"),
        BGC_FIELD("training.updates_per_round", c.training.updates_per_round, int,
                  "an integer"),
        BGC_FIELD("training.learning_rate", c.training.learning_rate, double, "a number"),
        BGC_FIELD("training.grad_clip", c.training.grad_clip, double, "a number"),
        BGC_FIELD("training.adam_beta1", c.training.adam_beta1, double, "a number"),
        BGC_FIELD("training.adam_beta2", c.training.adam_beta2, double, "a number"),
        BGC_FIELD("training.adam_epsilon", c.training.adam_epsilon, double, "a number"),
        BGC_FIELD("training.seed", c.training.seed, std::uint64_t, "an unsigned integer"),
        BGC_FIELD("training.eval_interval", c.training.eval_interval, std::int64_t,
                  "an integer"),
        BGC_FIELD("training.eval_episodes", c.training.eval_episodes, int, "an integer"),
        BGC_FIELD("training.checkpoint_interval", c.training.checkpoint_interval,
                  std::int64_t, "an integer"),
        BGC_FIELD("training.distill_steps", c.training.distill_steps, std::int64_t,
                  "an integer"),
        BGC_FIELD("training.distill_epsilon", c.training.distill_epsilon, double, "a number"),
        Field{"io.run_dir",
              [](ExperimentConfig& c, const std::string& v) {
                if (v.empty()) throw ConfigError("io.run_dir: must not be empty");
                c.run_dir = v;
              },
              [](const ExperimentConfig& c) { return c.run_dir; }},
    };
    return f;
  }();
  return table;
}

#undef BGC_FIELD

const Field* find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError(key + ": " + why);
}

ExperimentConfig from_ptree(const boost::property_tree::ptree& tree) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(section + ": keys must live inside a [section]");
    }
    for (const auto& [name, leaf] : body) {
      const std::string key = section + "." + name;
      const Field* f = find_field(key);
      if (f == nullptr) throw ConfigError(key + ": unknown configuration key");
      f->set(cfg, leaf.get_value<std::string>());
      seen.insert(key);
    }
  }
  for (const std::string& key : required_keys()) {
    if (!seen.count(key)) throw ConfigError(key + ": required field is missing");
  }
  return cfg;
}

}  // namespace

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {"env.n_allies", "env.n_enemies"};
  return keys;
}

void ExperimentConfig::validate() const {
  env.validate();
  model_config().validate();
  require(model.knn_k <= env.n_allies - 1, "model.knn_k",
          "must be <= n_allies - 1 (" + std::to_string(env.n_allies - 1) + ")");
  require(model.hypernet_dim >= 1, "model.hypernet_dim", "must be >= 1");
  require(model.mixer_layers == 2, "model.mixer_layers", "only 2 mixing layers are supported");
  require(loss.delta > 0.0, "loss.delta", "must be > 0");
  require(loss.lambda_split >= 0.0, "loss.lambda_split", "must be >= 0");
  require(loss.lambda_distill >= 0.0, "loss.lambda_distill", "must be >= 0");
  require(loss.gamma >= 0.0 && loss.gamma <= 1.0, "loss.gamma", "must lie in [0, 1]");
  const TrainingConfig& t = training;
  require(t.buffer_capacity >= 1, "training.buffer_capacity", "must be >= 1");
  require(t.batch_size >= 1, "training.batch_size", "must be >= 1");
  require(t.batch_size <= t.buffer_capacity, "training.batch_size",
          "must not exceed buffer_capacity");
  require(t.workers >= 1, "training.workers", "must be >= 1");
  require(t.total_env_steps >= 1, "training.total_env_steps", "must be >= 1");
  require(t.epsilon_start >= 0.0 && t.epsilon_start <= 1.0, "training.epsilon_start",
          "must lie in [0, 1]");
  require(t.epsilon_finish >= 0.0 && t.epsilon_finish <= 1.0, "training.epsilon_finish",
          "must lie in [0, 1]");
  require(t.epsilon_anneal_steps >= 0, "training.epsilon_anneal_steps", "must be >= 0");
  require(t.target_update_interval >= 1, "training.target_update_interval", "must be >= 1");
  require(t.updates_per_round >= 0, "training.updates_per_round", "must be >= 0");
  require(t.reward_scale > 0.0, "training.reward_scale", "must be > 0");
  require(t.learning_rate > 0.0, "training.learning_rate", "must be > 0");
  require(t.grad_clip > 0.0, "training.grad_clip", "must be > 0");
  require(t.adam_beta1 >= 0.0 && t.adam_beta1 < 1.0, "training.adam_beta1", "must lie in [0, 1)");
  require(t.adam_beta2 >= 0.0 && t.adam_beta2 < 1.0, "training.adam_beta2", "must lie in [0, 1)");
  require(t.adam_epsilon > 0.0, "training.adam_epsilon", "must be > 0");
  require(t.eval_interval >= 1, "training.eval_interval", "must be >= 1");
  require(t.eval_episodes >= 1, "training.eval_episodes", "must be >= 1");
  require(t.checkpoint_interval >= 1, "training.checkpoint_interval", "must be >= 1");
  require(t.distill_steps >= 0, "training.distill_steps", "must be >= 0");
  require(t.distill_epsilon >= 0.0 && t.distill_epsilon <= 1.0, "training.distill_epsilon",
          "must lie in [0, 1]");
  require(!run_dir.empty(), "io.run_dir", "must not be empty");
}

agent::ModelConfig ExperimentConfig::model_config() const {
  agent::ModelConfig m;
  m.kind = model.agent;
  m.input_dim = env.obs_dim() + env.n_allies + env.n_actions();
  m.n_actions = env.n_actions();
  m.hidden_dim = model.hidden_dim;
  m.embed_dim = model.embed_dim;
  m.group_dim = model.group_dim;
  m.individual_dim = model.individual_dim;
  m.knn_k = model.knn_k;
  m.gat_layers = model.gat_layers;
  m.gat_value_projection = model.gat_value_projection;
  m.gat_dropout = model.gat_dropout;
  m.leaky_relu_slope = model.leaky_relu_slope;
  return m;
}

mixers::MixerConfig ExperimentConfig::mixer_config() const {
  mixers::MixerConfig m;
  m.kind = model.mixer;
  m.n_agents = env.n_allies;
  m.state_dim = env.state_dim();
  m.hypernet_dim = model.hypernet_dim;
  return m;
}

ExperimentConfig parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  return from_ptree(tree);
}

ExperimentConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_ini(text.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key + ": unknown configuration key");
  f->set(cfg, value);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' must have the form section.key=value");
  }
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string get_value(const ExperimentConfig& cfg, const std::string& key) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key + ": unknown configuration key");
  return f->get(cfg);
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string current;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

void write_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << to_ini(cfg);
  if (!out) throw IoError("failed writing config file '" + path + "'");
}

}  // namespace bgc::config

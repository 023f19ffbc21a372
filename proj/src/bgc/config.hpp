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

#ifndef BGC_CONFIG_HPP_
#define BGC_CONFIG_HPP_

// Experiment configuration: an INI file with [env], [model], [loss],
// [training] and [io] sections. Keys not listed here are rejected. Overrides
// use "section.key=value".

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bgc/belief_agent.hpp"
#include "bgc/env.hpp"
#include "bgc/mixers.hpp"

namespace bgc::config {

struct LossConfig {
  double delta = 0.005;
  double lambda_split = 0.1;
  double lambda_distill = 1.0;
  double gamma = 0.99;
};

struct TrainingConfig {
  int buffer_capacity = 5000;
  int batch_size = 7;
  int workers = 7;
  std::int64_t total_env_steps = 200000;
  double epsilon_start = 1.0;
  double epsilon_finish = 0.05;
  std::int64_t epsilon_anneal_steps = 50000;
  int target_update_interval = 200;
  // Gradient updates per collection round of `workers` episodes.
  int updates_per_round = 1;
  // Multiplies replayed rewards before the TD target (returns stay in env
  // units everywhere else).
  double reward_scale = 20.0;
  double learning_rate = 5e-4;
  double grad_clip = 10.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::int64_t eval_interval = 20000;
  int eval_episodes = 20;
  std::int64_t checkpoint_interval = 50000;
  std::int64_t distill_steps = 50000;
  // Exploration of the frozen teacher while collecting distillation data.
  double distill_epsilon = 0.05;
};

struct ModelSection {
  agent::AgentKind agent = agent::AgentKind::kBelief;
  mixers::MixerKind mixer = mixers::MixerKind::kQmix;
  int hidden_dim = 64;
  int embed_dim = 64;
  int group_dim = 32;
  int individual_dim = 32;
  int knn_k = 2;
  int gat_layers = 1;
  bool gat_value_projection = false;
  double gat_dropout = 0.5;
  double leaky_relu_slope = 0.2;
  int hypernet_dim = 64;
  int mixer_layers = 2;
};

struct ExperimentConfig {
  env::EnvConfig env;
  ModelSection model;
  LossConfig loss;
  TrainingConfig training;
  std::string run_dir = "runs/default";

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  agent::ModelConfig model_config() const;
  mixers::MixerConfig mixer_config() const;
};

// Keys that must appear in a config file.
const std::vector<std::string>& required_keys();

ExperimentConfig load_file(const std::string& path);
ExperimentConfig parse_ini(const std::string& text);

// Applies "section.key=value" (or key and value separately). Throws
// ConfigError for unknown keys or unparsable values.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

std::string get_value(const ExperimentConfig& cfg, const std::string& key);

// Every key in a stable order; parse_ini(to_ini(c)) reproduces c exactly.
std::string to_ini(const ExperimentConfig& cfg);
void write_file(const ExperimentConfig& cfg, const std::string& path);

}  // namespace bgc::config

#endif  // BGC_CONFIG_HPP_

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

#ifndef BGC_LEARNER_HPP_
#define BGC_LEARNER_HPP_

// Gradient updates: Q-learning for agents + mixer, and the student
// distillation step.

#include <cstdint>
#include <random>
#include <vector>

#include "bgc/autodiff.hpp"
#include "bgc/belief_agent.hpp"
#include "bgc/config.hpp"
#include "bgc/mixers.hpp"
#include "bgc/replay.hpp"

namespace bgc::learner {

using ad::Matrix;
using ad::Parameter;

// Linear schedule from epsilon_start to epsilon_finish over
// epsilon_anneal_steps environment steps, constant afterwards.
double anneal_epsilon(const config::TrainingConfig& cfg, std::int64_t env_steps);

class Adam {
 public:
  Adam() = default;
  Adam(double lr, double beta1, double beta2, double eps);

  // One update of params with grads (same order and shapes).
  void step(const std::vector<Parameter*>& params, const std::vector<Matrix>& grads);
  std::int64_t steps() const { return t_; }

 private:
  double lr_ = 5e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

// Scales grads in place so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(std::vector<Matrix>& grads, double max_norm);

// Block-diagonal neighbourhood mask for a batch of teams.
ad::BoolMatrix batch_mask(const std::vector<env::AgentPositions>& teams, int k);

struct TrainStats {
  double td_loss = 0.0;
  double split_loss = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;
  double q_taken_mean = 0.0;
  double target_mean = 0.0;
  bool target_updated = false;
};

class QLearner {
 public:
  QLearner(const config::ExperimentConfig& cfg, std::uint64_t seed);

  TrainStats train(const replay::EpisodeBatch& batch);
  void update_target();

  agent::AgentParams& agent() { return agent_; }
  const agent::AgentParams& agent() const { return agent_; }
  mixers::MixerParams& mixer() { return mixer_; }
  const mixers::MixerParams& mixer() const { return mixer_; }
  const agent::AgentParams& target_agent() const { return target_agent_; }
  const mixers::MixerParams& target_mixer() const { return target_mixer_; }
  const agent::ModelConfig& model() const { return model_; }
  std::int64_t train_steps() const { return train_steps_; }

 private:
  // (B x horizon) mixed target-network values of the greedy next action.
  Matrix target_values(const replay::EpisodeBatch& batch) const;

  config::ExperimentConfig cfg_;
  agent::ModelConfig model_;
  agent::AgentParams agent_;
  mixers::MixerParams mixer_;
  agent::AgentParams target_agent_;
  mixers::MixerParams target_mixer_;
  Adam optimizer_;
  std::mt19937_64 rng_;
  std::int64_t train_steps_ = 0;
};

struct DistillStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Trains a student to reproduce the frozen teacher's group features g'.
// Teacher features use the belief mean and no attention dropout.
class StudentTrainer {
 public:
  StudentTrainer(const config::ExperimentConfig& cfg, std::uint64_t seed);

  DistillStats train(const replay::EpisodeBatch& batch, const agent::AgentParams& teacher);

  agent::StudentParams& student() { return student_; }
  const agent::StudentParams& student() const { return student_; }

 private:
  config::ExperimentConfig cfg_;
  agent::ModelConfig model_;
  agent::StudentParams student_;
  Adam optimizer_;
};

// Teacher group features g' for every step of a batch: horizon + 1 matrices
// of (B n) x group_dim, computed with zero belief noise.
std::vector<Matrix> teacher_group_features(const replay::EpisodeBatch& batch,
                                           const agent::AgentParams& teacher,
                                           const agent::ModelConfig& model);

}  // namespace bgc::learner

#endif  // BGC_LEARNER_HPP_

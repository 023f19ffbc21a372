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

#ifndef BGC_HARNESS_HPP_
#define BGC_HARNESS_HPP_

// Rollouts, the training loop, evaluation, distillation and embedding export.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bgc/belief_agent.hpp"
#include "bgc/config.hpp"
#include "bgc/learner.hpp"
#include "bgc/mixers.hpp"
#include "bgc/replay.hpp"

namespace bgc::harness {

using ad::Matrix;

// Independent 64-bit stream for (master seed, stream id, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Seed streams.
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;
inline constexpr std::uint64_t kDistillStream = 3;
inline constexpr std::uint64_t kHeldOutStream = 4;

enum class Mode { kTrain, kEval };

enum class PolicyKind { kAgent, kRandom };

struct Policy {
  PolicyKind kind = PolicyKind::kAgent;
  const agent::ModelConfig* model = nullptr;
  const agent::AgentParams* agent = nullptr;
  agent::GroupSource source = agent::GroupSource::kTeacher;
  // Required in student mode; in teacher mode a non-null student is run
  // alongside (noise-free) so traces can compare both.
  const agent::StudentParams* student = nullptr;
};

// Per-step diagnostics of one rollout (timesteps 0..length-1).
struct StepTrace {
  env::AgentPositions positions;
  Matrix group;          // n x group_dim: g' (teacher) or student estimate
  Matrix q;              // n x n_actions of the acting policy
  Matrix q_student;      // filled when a teacher-mode policy carries a student
  std::vector<int> actions;
};

struct RolloutOptions {
  Mode mode = Mode::kEval;
  double epsilon = 0.0;     // forced to 0 in eval mode
  std::uint64_t seed = 0;   // env reset seed; action and noise streams derive from it
};

replay::EpisodeRecord rollout_episode(const env::EnvConfig& env_cfg, const Policy& policy,
                                      const RolloutOptions& opts,
                                      std::vector<StepTrace>* trace = nullptr);

// Runs one episode per seed on `workers` threads. Results come back in seed
// order regardless of scheduling.
std::vector<replay::EpisodeRecord> collect(const env::EnvConfig& env_cfg, const Policy& policy,
                                           Mode mode, double epsilon,
                                           const std::vector<std::uint64_t>& seeds,
                                           int workers);

struct EvalResult {
  int episodes = 0;
  double win_rate = 0.0;
  double mean_return = 0.0;
  double return_stddev = 0.0;
  std::vector<double> returns;
  std::vector<int> won;
};

// Greedy, noise-free episodes on seeds derive_seed(seed, kEvalStream, i).
EvalResult evaluate(const env::EnvConfig& env_cfg, const Policy& policy, int n_episodes,
                    std::uint64_t seed, int workers = 1);

struct TrainSummary {
  std::int64_t env_steps = 0;
  std::int64_t episodes = 0;
  std::int64_t train_steps = 0;
  EvalResult final_eval;
  std::string final_checkpoint;
  std::string metrics_path;
};

struct TrainHooks {
  // Called after every collection round; return false to stop early.
  std::function<bool(std::int64_t env_steps)> on_round;
  // Called for each metrics record (already written to the metrics file).
  std::function<void(const std::string& json_line)> on_record;
};

// Full training run into cfg.run_dir: config.resolved.ini, metrics.jsonl,
// checkpoints/step_<N>.ckpt at every checkpoint_interval and final.ckpt.
TrainSummary train(const config::ExperimentConfig& cfg, const TrainHooks& hooks = {});

struct DistillReport {
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  int agreement_states = 0;
  double agreement = 0.0;
  double teacher_win_rate = 0.0;
  double student_win_rate = 0.0;
  double win_rate_delta = 0.0;  // student - teacher
  double first_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;
  std::string student_checkpoint;

  std::string to_json() const;
};

struct AgreementResult {
  int states = 0;
  double agreement = 0.0;
};

// Greedy-action agreement between teacher and student-mode policies on the
// first n_states alive-agent decisions of held-out teacher episodes.
AgreementResult action_agreement(const config::ExperimentConfig& cfg,
                                 const agent::AgentParams& teacher,
                                 const agent::StudentParams& student, int n_states,
                                 std::uint64_t seed);

// Trains a student against the frozen teacher in teacher_checkpoint for
// `steps` environment steps, writes out_dir/student.ckpt and
// out_dir/distill_report.json. eval_episodes is used for both win rates.
DistillReport distill(const config::ExperimentConfig& cfg, const std::string& teacher_checkpoint,
                      std::int64_t steps, const std::string& out_dir, int eval_episodes,
                      int agreement_states = 1000);

// Tab-separated rows: run id, timestep, agent, alive, x, y, features...
// Returns the number of rows written.
std::int64_t export_embeddings(const config::ExperimentConfig& cfg,
                               const std::string& checkpoint_path, int n_episodes,
                               const std::string& out_path, std::uint64_t seed,
                               bool use_student, const std::string& run_id);

struct GroupingResult {
  double adjacent_mean = 0.0;
  double non_adjacent_mean = 0.0;
  std::int64_t adjacent_pairs = 0;
  std::int64_t non_adjacent_pairs = 0;
};

// Mean Euclidean distance between g' rows of alive agent pairs, split by kNN
// adjacency, pooled over n_episodes evaluation episodes.
GroupingResult grouping_distances(const config::ExperimentConfig& cfg,
                                  const agent::AgentParams& agent_params, int n_episodes,
                                  std::uint64_t seed);

}  // namespace bgc::harness

#endif  // BGC_HARNESS_HPP_

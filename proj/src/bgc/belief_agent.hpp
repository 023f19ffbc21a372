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

#ifndef BGC_BELIEF_AGENT_HPP_
#define BGC_BELIEF_AGENT_HPP_

// Agent networks. All agents share one set of parameters; a batch of agents
// (possibly from several episodes) is a matrix with one agent per row.
//
// Belief agent, per timestep:
//   x        = [obs | one-hot(id) | one-hot(last action)]
//   h'       = GRU(ReLU(x W_e + b_e), h)
//   mean, lv = linear heads of h'; s = individual-feature head of h'
//   g        = mean + exp(lv / 2) * noise
//   g'       = masked graph attention of g over the kNN neighbourhood
//   Q        = s * WeightNet(g') + BiasNet(g')
//
// The student replaces g' by a head on its own encoder/GRU, so it needs no
// information from other agents.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bgc/autodiff.hpp"

namespace bgc::agent {

using ad::BoolMatrix;
using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

enum class AgentKind { kBelief, kRecurrent };

struct ModelConfig {
  AgentKind kind = AgentKind::kBelief;
  int input_dim = 0;
  int n_actions = 0;
  int hidden_dim = 64;
  int embed_dim = 64;
  int group_dim = 32;
  int individual_dim = 32;
  int knn_k = 2;
  int gat_layers = 1;
  bool gat_value_projection = false;
  double gat_dropout = 0.5;
  double leaky_relu_slope = 0.2;
  double log_var_min = -10.0;
  double log_var_max = 2.0;

  void validate() const;
};

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, int in, int out, std::mt19937_64& rng);
  Var operator()(Tape& t, Var x) const;
  int in_dim() const { return static_cast<int>(weight.value.rows()); }
  int out_dim() const { return static_cast<int>(weight.value.cols()); }
};

// Gated recurrent unit with the usual (reset, update, candidate) gate order.
struct GruCell {
  Parameter w_input;   // in x 3H
  Parameter w_hidden;  // H x 3H
  Parameter b_input;   // 1 x 3H
  Parameter b_hidden;  // 1 x 3H

  GruCell() = default;
  GruCell(const std::string& name, int in, int hidden, std::mt19937_64& rng);
  Var operator()(Tape& t, Var x, Var h) const;
  int hidden_dim() const { return static_cast<int>(w_hidden.value.rows()); }
};

struct GatLayer {
  Parameter w;         // F x F
  Parameter attn_src;  // F x 1, the half of `a` applied to W g_i
  Parameter attn_dst;  // F x 1, the half of `a` applied to W g_j

  GatLayer() = default;
  GatLayer(const std::string& name, int dim, std::mt19937_64& rng);
};

struct AgentParams {
  AgentKind kind = AgentKind::kBelief;
  Linear encoder;
  GruCell gru;
  // Belief agent.
  Linear mean_head;
  Linear log_var_head;
  Linear individual_head;
  std::vector<GatLayer> gat;
  Linear weight_net;
  Linear bias_net;
  // Recurrent baseline.
  Linear q_head;

  static AgentParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct StudentParams {
  Linear encoder;
  GruCell gru;
  Linear head;

  static StudentParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct BeliefDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_variance;

  Eigen::VectorXd variance() const { return log_variance.array().exp(); }
  Eigen::VectorXd stddev() const { return (0.5 * log_variance.array()).exp(); }
};

// [obs | one-hot(agent_id) | one-hot(last_action)]; last_action < 0 means
// "episode start" and leaves the action block all-zero.
std::vector<double> build_input(const std::vector<double>& observation, int agent_id,
                                int last_action, int n_agents, int n_actions);

// Encoder MLP followed by one GRU step. Returns the new hidden state, which
// doubles as the per-agent feature vector.
Var encode_and_recur(Tape& t, const Linear& encoder, const GruCell& gru, Var input,
                     Var hidden);

struct BeliefVars {
  Var mean;
  Var log_var;     // clamped to [log_var_min, log_var_max]
  Var individual;  // s
};
BeliefVars belief_head(Tape& t, const AgentParams& p, const ModelConfig& cfg, Var features);

// mean + exp(log_var / 2) * noise.
Var reparameterize(Tape& t, Var mean, Var log_var, Var noise);

struct GatOptions {
  double slope = 0.2;
  bool value_projection = false;
  double dropout = 0.0;  // applied only when rng != nullptr
  std::mt19937_64* rng = nullptr;
};
// One masked attention layer: g'_i = ReLU(sum_{j in N_i} alpha_ij v_j) with
// v_j = g_j (or W g_j under value projection).
Var gat_layer(Tape& t, const GatLayer& layer, Var g, const BoolMatrix& mask,
              const GatOptions& opts, Matrix* alpha_out = nullptr);

// Drops each attention edge with probability `rate`, never emptying a row.
BoolMatrix drop_attention_edges(const BoolMatrix& mask, double rate, std::mt19937_64& rng);

// Q = s * reshape(WeightNet(g'), individual_dim x n_actions) + BiasNet(g').
Var fuse_q(Tape& t, const AgentParams& p, Var group, Var individual);

struct StudentOutput {
  Var estimate;
  Var hidden;
};
StudentOutput student_forward(Tape& t, const StudentParams& p, Var input, Var hidden);

// Epsilon-greedy over available actions; greedy ties go to the lowest index.
int select_action(const Eigen::Ref<const Eigen::VectorXd>& q,
                  const std::vector<std::uint8_t>& available, double epsilon,
                  std::mt19937_64& rng);
int greedy_action(const Eigen::Ref<const Eigen::VectorXd>& q,
                  const std::vector<std::uint8_t>& available);

// Everything produced for one timestep of a batch of agents.
struct StepOutput {
  Var q;
  Var hidden;
  Var mean;
  Var log_var;
  Var sample;      // g
  Var group;       // g' (teacher) or the student estimate (distilled)
  Var individual;  // s
  Matrix attention;
};

enum class GroupSource { kTeacher, kStudent };

struct StepInputs {
  Var input;       // R x input_dim
  Var hidden;      // R x hidden_dim
  Var noise;       // R x group_dim, ignored by the recurrent baseline
  const BoolMatrix* mask = nullptr;  // R x R neighbourhood (block-diagonal)
  GroupSource source = GroupSource::kTeacher;
  const StudentParams* student = nullptr;
  Var student_hidden;  // required for kStudent
  std::mt19937_64* dropout_rng = nullptr;  // non-null enables attention dropout
};

StepOutput agent_step(Tape& t, const AgentParams& p, const ModelConfig& cfg,
                      const StepInputs& in, Var* student_hidden_out = nullptr);

}  // namespace bgc::agent

#endif  // BGC_BELIEF_AGENT_HPP_

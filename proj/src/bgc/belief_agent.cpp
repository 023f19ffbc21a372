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

#include "bgc/belief_agent.hpp"

#include <cmath>
#include <limits>

#include "bgc/errors.hpp"

namespace bgc::agent {
namespace {

Matrix uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("model." + field + ": " + why);
}

}  // namespace

void ModelConfig::validate() const {
  require(input_dim >= 1, "input_dim", "must be >= 1");
  require(n_actions >= 1, "n_actions", "must be >= 1");
  require(hidden_dim >= 1, "hidden_dim", "must be >= 1");
  require(embed_dim >= 1, "embed_dim", "must be >= 1");
  require(group_dim >= 1, "group_dim", "must be >= 1");
  require(individual_dim >= 1, "individual_dim", "must be >= 1");
  require(knn_k >= 0, "knn_k", "must be >= 0");
  require(gat_layers >= 1, "gat_layers", "must be >= 1");
  require(gat_dropout >= 0.0 && gat_dropout < 1.0, "gat_dropout", "must lie in [0, 1)");
  require(leaky_relu_slope >= 0.0, "leaky_relu_slope", "must be >= 0");
  require(log_var_min < log_var_max, "log_var_min", "must be below log_var_max");
}

Linear::Linear(const std::string& name, int in, int out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = {name + ".weight", uniform_matrix(in, out, bound, rng)};
  bias = {name + ".bias", uniform_matrix(1, out, bound, rng)};
}

Var Linear::operator()(Tape& t, Var x) const {
  return ad::add_row(ad::matmul(x, t.param(weight)), t.param(bias));
}

GruCell::GruCell(const std::string& name, int in, int hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_input = {name + ".w_input", uniform_matrix(in, 3 * hidden, bound, rng)};
  w_hidden = {name + ".w_hidden", uniform_matrix(hidden, 3 * hidden, bound, rng)};
  b_input = {name + ".b_input", uniform_matrix(1, 3 * hidden, bound, rng)};
  b_hidden = {name + ".b_hidden", uniform_matrix(1, 3 * hidden, bound, rng)};
}

Var GruCell::operator()(Tape& t, Var x, Var h) const {
  const Eigen::Index hd = hidden_dim();
  Var gi = ad::add_row(ad::matmul(x, t.param(w_input)), t.param(b_input));
  Var gh = ad::add_row(ad::matmul(h, t.param(w_hidden)), t.param(b_hidden));
  Var reset = ad::sigmoid(ad::add(ad::slice_cols(gi, 0, hd), ad::slice_cols(gh, 0, hd)));
  Var update = ad::sigmoid(ad::add(ad::slice_cols(gi, hd, hd), ad::slice_cols(gh, hd, hd)));
  Var candidate = ad::tanh(ad::add(ad::slice_cols(gi, 2 * hd, hd),
                                   ad::mul(reset, ad::slice_cols(gh, 2 * hd, hd))));
  // h' = (1 - z) * n + z * h = n + z * (h - n)
  return ad::add(candidate, ad::mul(update, ad::sub(h, candidate)));
}

GatLayer::GatLayer(const std::string& name, int dim, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  w = {name + ".w", uniform_matrix(dim, dim, bound, rng)};
  attn_src = {name + ".attn_src", uniform_matrix(dim, 1, bound, rng)};
  attn_dst = {name + ".attn_dst", uniform_matrix(dim, 1, bound, rng)};
}

AgentParams AgentParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  AgentParams p;
  p.kind = cfg.kind;
  p.encoder = Linear("agent.encoder", cfg.input_dim, cfg.embed_dim, rng);
  p.gru = GruCell("agent.gru", cfg.embed_dim, cfg.hidden_dim, rng);
  if (cfg.kind == AgentKind::kBelief) {
    p.mean_head = Linear("agent.mean_head", cfg.hidden_dim, cfg.group_dim, rng);
    p.log_var_head = Linear("agent.log_var_head", cfg.hidden_dim, cfg.group_dim, rng);
    p.individual_head =
        Linear("agent.individual_head", cfg.hidden_dim, cfg.individual_dim, rng);
    for (int l = 0; l < cfg.gat_layers; ++l) {
      p.gat.emplace_back("agent.gat" + std::to_string(l), cfg.group_dim, rng);
    }
    p.weight_net = Linear("agent.weight_net", cfg.group_dim,
                          cfg.individual_dim * cfg.n_actions, rng);
    p.bias_net = Linear("agent.bias_net", cfg.group_dim, cfg.n_actions, rng);
  } else {
    p.q_head = Linear("agent.q_head", cfg.hidden_dim, cfg.n_actions, rng);
  }
  return p;
}

std::vector<const Parameter*> AgentParams::parameters() const {
  std::vector<const Parameter*> out = {&encoder.weight,  &encoder.bias,   &gru.w_input,
                                       &gru.w_hidden,    &gru.b_input,    &gru.b_hidden};
  if (kind == AgentKind::kBelief) {
    for (const Linear* l : {&mean_head, &log_var_head, &individual_head}) {
      out.push_back(&l->weight);
      out.push_back(&l->bias);
    }
    for (const GatLayer& g : gat) {
      out.push_back(&g.w);
      out.push_back(&g.attn_src);
      out.push_back(&g.attn_dst);
    }
    for (const Linear* l : {&weight_net, &bias_net}) {
      out.push_back(&l->weight);
      out.push_back(&l->bias);
    }
  } else {
    out.push_back(&q_head.weight);
    out.push_back(&q_head.bias);
  }
  return out;
}

std::vector<Parameter*> AgentParams::parameters() {
  std::vector<Parameter*> out;
  for (const Parameter* p : std::as_const(*this).parameters()) {
    out.push_back(const_cast<Parameter*>(p));
  }
  return out;
}

StudentParams StudentParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  StudentParams p;
  p.encoder = Linear("student.encoder", cfg.input_dim, cfg.embed_dim, rng);
  p.gru = GruCell("student.gru", cfg.embed_dim, cfg.hidden_dim, rng);
  p.head = Linear("student.head", cfg.hidden_dim, cfg.group_dim, rng);
  return p;
}

std::vector<const Parameter*> StudentParams::parameters() const {
  return {&encoder.weight, &encoder.bias, &gru.w_input, &gru.w_hidden,
          &gru.b_input,    &gru.b_hidden, &head.weight, &head.bias};
}

std::vector<Parameter*> StudentParams::parameters() {
  std::vector<Parameter*> out;
  for (const Parameter* p : std::as_const(*this).parameters()) {
    out.push_back(const_cast<Parameter*>(p));
  }
  return out;
}

std::vector<double> build_input(const std::vector<double>& observation, int agent_id,
                                int last_action, int n_agents, int n_actions) {
  if (agent_id < 0 || agent_id >= n_agents) {
    throw ContractViolation("build_input: agent id " + std::to_string(agent_id) +
                            " out of range for " + std::to_string(n_agents) + " agents");
  }
  if (last_action >= n_actions) {
    throw ContractViolation("build_input: action " + std::to_string(last_action) +
                            " out of range for " + std::to_string(n_actions) + " actions");
  }
  std::vector<double> x(observation.size() + n_agents + n_actions, 0.0);
  std::copy(observation.begin(), observation.end(), x.begin());
  x[observation.size() + agent_id] = 1.0;
  if (last_action >= 0) x[observation.size() + n_agents + last_action] = 1.0;
  return x;
}

Var encode_and_recur(Tape& t, const Linear& encoder, const GruCell& gru, Var input,
                     Var hidden) {
  if (!input.value().allFinite()) throw NumericError("encode_and_recur: non-finite input");
  return gru(t, ad::relu(encoder(t, input)), hidden);
}

BeliefVars belief_head(Tape& t, const AgentParams& p, const ModelConfig& cfg, Var features) {
  BeliefVars b;
  b.mean = p.mean_head(t, features);
  b.log_var = ad::clamp(p.log_var_head(t, features), cfg.log_var_min, cfg.log_var_max);
  b.individual = p.individual_head(t, features);
  return b;
}

Var reparameterize(Tape&, Var mean, Var log_var, Var noise) {
  if (mean.rows() != noise.rows() || mean.cols() != noise.cols()) {
    throw ContractViolation("reparameterize: noise shape must match the belief");
  }
  return ad::add(mean, ad::mul(ad::exp(ad::scale(log_var, 0.5)), noise));
}

BoolMatrix drop_attention_edges(const BoolMatrix& mask, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return mask;
  std::bernoulli_distribution drop(rate);
  BoolMatrix out = mask;
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) && drop(rng)) out(i, j) = false;
      any = any || out(i, j);
    }
    if (!any) out.row(i) = mask.row(i);
  }
  return out;
}

Var gat_layer(Tape& t, const GatLayer& layer, Var g, const BoolMatrix& mask,
              const GatOptions& opts, Matrix* alpha_out) {
  if (mask.rows() != g.rows() || mask.cols() != g.rows()) {
    throw ContractViolation("gat_layer: mask is " + std::to_string(mask.rows()) + "x" +
                            std::to_string(mask.cols()) + " but batch has " +
                            std::to_string(g.rows()) + " agents");
  }
  Var projected = ad::matmul(g, t.param(layer.w));
  Var src = ad::matmul(projected, t.param(layer.attn_src));
  Var dst = ad::matmul(projected, t.param(layer.attn_dst));
  Var values = opts.value_projection ? projected : g;
  if (opts.rng != nullptr && opts.dropout > 0.0) {
    const BoolMatrix dropped = drop_attention_edges(mask, opts.dropout, *opts.rng);
    return ad::relu(ad::masked_attention(src, dst, values, dropped, opts.slope, alpha_out));
  }
  return ad::relu(ad::masked_attention(src, dst, values, mask, opts.slope, alpha_out));
}

Var fuse_q(Tape& t, const AgentParams& p, Var group, Var individual) {
  Var weights = p.weight_net(t, group);
  Var bias = p.bias_net(t, group);
  const Eigen::Index n_actions = p.bias_net.out_dim();
  return ad::add(ad::batched_vecmat(individual, weights, n_actions), bias);
}

StudentOutput student_forward(Tape& t, const StudentParams& p, Var input, Var hidden) {
  Var h = encode_and_recur(t, p.encoder, p.gru, input, hidden);
  return {p.head(t, h), h};
}

int greedy_action(const Eigen::Ref<const Eigen::VectorXd>& q,
                  const std::vector<std::uint8_t>& available) {
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < q.size(); ++a) {
    if (!available[a]) continue;
    if (best < 0 || q(a) > best_q) {
      best = static_cast<int>(a);
      best_q = q(a);
    }
  }
  if (best < 0) throw ContractViolation("select_action: no available action");
  return best;
}

int select_action(const Eigen::Ref<const Eigen::VectorXd>& q,
                  const std::vector<std::uint8_t>& available, double epsilon,
                  std::mt19937_64& rng) {
  if (static_cast<Eigen::Index>(available.size()) != q.size()) {
    throw ContractViolation("select_action: mask length differs from Q length");
  }
  std::vector<int> legal;
  for (std::size_t a = 0; a < available.size(); ++a)
    if (available[a]) legal.push_back(static_cast<int>(a));
  if (legal.empty()) throw ContractViolation("select_action: no available action");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
      return legal[pick(rng)];
    }
  }
  return greedy_action(q, available);
}

StepOutput agent_step(Tape& t, const AgentParams& p, const ModelConfig& cfg,
                      const StepInputs& in, Var* student_hidden_out) {
  StepOutput out;
  out.hidden = encode_and_recur(t, p.encoder, p.gru, in.input, in.hidden);
  if (p.kind == AgentKind::kRecurrent) {
    out.q = p.q_head(t, out.hidden);
    return out;
  }
  const BeliefVars b = belief_head(t, p, cfg, out.hidden);
  out.mean = b.mean;
  out.log_var = b.log_var;
  out.individual = b.individual;
  out.sample = reparameterize(t, b.mean, b.log_var, in.noise);
  if (in.source == GroupSource::kStudent) {
    if (in.student == nullptr) throw ContractViolation("agent_step: student params missing");
    const StudentOutput s = student_forward(t, *in.student, in.input, in.student_hidden);
    out.group = s.estimate;
    if (student_hidden_out != nullptr) *student_hidden_out = s.hidden;
  } else {
    if (in.mask == nullptr) throw ContractViolation("agent_step: neighbourhood mask missing");
    GatOptions opts;
    opts.slope = cfg.leaky_relu_slope;
    opts.value_projection = cfg.gat_value_projection;
    opts.dropout = cfg.gat_dropout;
    opts.rng = in.dropout_rng;
    Var g = out.sample;
    for (std::size_t l = 0; l < p.gat.size(); ++l) {
      g = gat_layer(t, p.gat[l], g, *in.mask, opts, l == 0 ? &out.attention : nullptr);
    }
    out.group = g;
  }
  out.q = fuse_q(t, p, out.group, out.individual);
  return out;
}

}  // namespace bgc::agent

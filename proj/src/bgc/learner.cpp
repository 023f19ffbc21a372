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

#include "bgc/learner.hpp"

#include <algorithm>
#include <cmath>

#include "bgc/errors.hpp"
#include "bgc/objectives.hpp"
#include "bgc/topology.hpp"

namespace bgc::learner {
namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n01(rng);
  return m;
}

std::vector<Parameter*> trainable(agent::AgentParams& a, mixers::MixerParams& m) {
  std::vector<Parameter*> out = a.parameters();
  for (Parameter* p : m.parameters()) out.push_back(p);
  return out;
}

void check_finite(const std::vector<Matrix>& grads, const char* where) {
  for (const Matrix& g : grads) {
    if (!g.allFinite()) throw NumericError(std::string(where) + ": non-finite gradient");
  }
}

}  // namespace

double anneal_epsilon(const config::TrainingConfig& cfg, std::int64_t env_steps) {
  if (env_steps < 0) throw ContractViolation("anneal_epsilon: negative step count");
  if (cfg.epsilon_anneal_steps <= 0 || env_steps >= cfg.epsilon_anneal_steps) {
    return cfg.epsilon_finish;
  }
  const double frac =
      static_cast<double>(env_steps) / static_cast<double>(cfg.epsilon_anneal_steps);
  return cfg.epsilon_start + frac * (cfg.epsilon_finish - cfg.epsilon_start);
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<Parameter*>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw ContractViolation("Adam::step: size mismatch");
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ContractViolation("Adam::step: parameter set changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    params[i]->value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

double clip_grad_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (Matrix& g : grads) g *= s;
  }
  return norm;
}

ad::BoolMatrix batch_mask(const std::vector<env::AgentPositions>& teams, int k) {
  std::vector<topology::AdjacencyMask> masks;
  masks.reserve(teams.size());
  for (const env::AgentPositions& p : teams) masks.push_back(topology::neighbourhood_mask(p, k));
  return topology::block_diagonal(masks);
}

QLearner::QLearner(const config::ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      model_(cfg.model_config()),
      agent_(agent::AgentParams::init(model_, seed)),
      mixer_(mixers::MixerParams::init(cfg.mixer_config(), seed + 1)),
      target_agent_(agent_),
      target_mixer_(mixer_),
      optimizer_(cfg.training.learning_rate, cfg.training.adam_beta1, cfg.training.adam_beta2,
                 cfg.training.adam_epsilon),
      rng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

void QLearner::update_target() {
  target_agent_ = agent_;
  target_mixer_ = mixer_;
}

Matrix QLearner::target_values(const replay::EpisodeBatch& batch) const {
  const int B = batch.batch;
  const int n = batch.n_agents;
  const int H = batch.horizon;
  Matrix out = Matrix::Zero(B, H);
  ad::Tape tape(false);
  ad::Var hidden = tape.constant(Matrix::Zero(B * n, model_.hidden_dim));
  const ad::Var zero_noise = tape.constant(Matrix::Zero(B * n, model_.group_dim));
  for (int t = 0; t <= H; ++t) {
    const bool belief = model_.kind == agent::AgentKind::kBelief;
    ad::BoolMatrix mask;
    agent::StepInputs in;
    in.input = tape.constant(batch.inputs[t]);
    in.hidden = hidden;
    if (belief) {
      mask = batch_mask(batch.positions[t], model_.knn_k);
      in.noise = zero_noise;
      in.mask = &mask;
    }
    const agent::StepOutput o = agent::agent_step(tape, target_agent_, model_, in);
    hidden = tape.constant(o.hidden.value());
    if (t == 0) continue;
    const Matrix& q = o.q.value();
    Matrix chosen(B, n);
    for (int r = 0; r < B * n; ++r) {
      const int a = agent::greedy_action(q.row(r).transpose(), batch.available[t][r]);
      chosen(r / n, r % n) = q(r, a);
    }
    ad::Var mixed = mixers::mix(tape, tape.constant(chosen), tape.constant(batch.states[t]),
                                target_mixer_);
    out.col(t - 1) = mixed.value().col(0);
  }
  return out;
}

TrainStats QLearner::train(const replay::EpisodeBatch& batch) {
  const int B = batch.batch;
  const int n = batch.n_agents;
  const int H = batch.horizon;
  if (H < 1) throw ContractViolation("QLearner::train: empty batch");
  const bool belief = model_.kind == agent::AgentKind::kBelief;

  const Matrix next = target_values(batch);
  const Matrix targets =
      objectives::td_targets(cfg_.training.reward_scale * batch.rewards, batch.terminated, next,
                             cfg_.loss.gamma);

  ad::Tape tape;
  ad::Var hidden = tape.constant(Matrix::Zero(B * n, model_.hidden_dim));
  std::vector<ad::Var> mixed_cols;
  ad::Var split_sum;
  int split_terms = 0;
  std::mt19937_64* dropout_rng = model_.gat_dropout > 0.0 ? &rng_ : nullptr;
  for (int t = 0; t < H; ++t) {
    ad::BoolMatrix mask;
    agent::StepInputs in;
    in.input = tape.constant(batch.inputs[t]);
    in.hidden = hidden;
    if (belief) {
      mask = batch_mask(batch.positions[t], model_.knn_k);
      in.noise = tape.constant(gaussian(B * n, model_.group_dim, rng_));
      in.mask = &mask;
      in.dropout_rng = dropout_rng;
    }
    const agent::StepOutput o = agent::agent_step(tape, agent_, model_, in);
    hidden = o.hidden;
    ad::Var taken = ad::reshape(ad::gather_cols(o.q, batch.actions[t]), B, n);
    mixed_cols.push_back(
        mixers::mix(tape, taken, tape.constant(batch.states[t]), mixer_));

    if (belief && cfg_.loss.lambda_split > 0.0) {
      std::vector<std::pair<int, int>> pairs;
      for (int b = 0; b < B; ++b) {
        if (batch.valid(b, t) == 0.0) continue;
        ++split_terms;
        const env::AgentPositions& pos = batch.positions[t][b];
        const auto team = topology::neighbourhood_mask(pos, model_.knn_k);
        for (const auto& [i, j] : objectives::non_adjacent_pairs(team, 0)) {
          if (!pos.alive[i] || !pos.alive[j]) continue;
          pairs.emplace_back(b * n + i, b * n + j);
        }
      }
      if (!pairs.empty()) {
        ad::Var s = objectives::split_loss(tape, o.mean, o.log_var, pairs, cfg_.loss.delta);
        split_sum = split_sum.tape == nullptr ? s : ad::add(split_sum, s);
      }
    }
  }
  ad::Var q_tot = ad::concat_cols(mixed_cols);
  ad::Var td = objectives::td_loss(tape, q_tot, targets, batch.valid);
  TrainStats stats;
  stats.td_loss = td.value()(0, 0);
  ad::Var loss = td;
  if (split_sum.tape != nullptr && split_terms > 0) {
    ad::Var split = ad::scale(split_sum, 1.0 / split_terms);
    stats.split_loss = split.value()(0, 0);
    loss = objectives::total_loss(td, split, cfg_.loss.lambda_split);
  }
  stats.total_loss = loss.value()(0, 0);
  if (!std::isfinite(stats.total_loss)) throw NumericError("QLearner::train: non-finite loss");
  const double valid = batch.valid.sum();
  stats.q_taken_mean = (q_tot.value().array() * batch.valid.array()).sum() / valid;
  stats.target_mean = (targets.array() * batch.valid.array()).sum() / valid;

  tape.backward(loss);
  const std::vector<Parameter*> params = trainable(agent_, mixer_);
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (const Parameter* p : params) grads.push_back(tape.param_grad(*p));
  check_finite(grads, "QLearner::train");
  stats.grad_norm = clip_grad_norm(grads, cfg_.training.grad_clip);
  optimizer_.step(params, grads);

  ++train_steps_;
  if (cfg_.training.target_update_interval > 0 &&
      train_steps_ % cfg_.training.target_update_interval == 0) {
    update_target();
    stats.target_updated = true;
  }
  return stats;
}

std::vector<Matrix> teacher_group_features(const replay::EpisodeBatch& batch,
                                           const agent::AgentParams& teacher,
                                           const agent::ModelConfig& model) {
  if (model.kind != agent::AgentKind::kBelief) {
    throw ContractViolation("teacher_group_features: teacher is not a belief agent");
  }
  const int R = batch.batch * batch.n_agents;
  ad::Tape tape(false);
  ad::Var hidden = tape.constant(Matrix::Zero(R, model.hidden_dim));
  const ad::Var zero_noise = tape.constant(Matrix::Zero(R, model.group_dim));
  std::vector<Matrix> out;
  for (int t = 0; t <= batch.horizon; ++t) {
    const ad::BoolMatrix mask = batch_mask(batch.positions[t], model.knn_k);
    agent::StepInputs in;
    in.input = tape.constant(batch.inputs[t]);
    in.hidden = hidden;
    in.noise = zero_noise;
    in.mask = &mask;
    const agent::StepOutput o = agent::agent_step(tape, teacher, model, in);
    hidden = tape.constant(o.hidden.value());
    out.push_back(o.group.value());
  }
  return out;
}

StudentTrainer::StudentTrainer(const config::ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      model_(cfg.model_config()),
      student_(agent::StudentParams::init(model_, seed)),
      optimizer_(cfg.training.learning_rate, cfg.training.adam_beta1, cfg.training.adam_beta2,
                 cfg.training.adam_epsilon) {}

DistillStats StudentTrainer::train(const replay::EpisodeBatch& batch,
                                   const agent::AgentParams& teacher) {
  const int n = batch.n_agents;
  const int R = batch.batch * n;
  const std::vector<Matrix> features = teacher_group_features(batch, teacher, model_);

  ad::Tape tape;
  ad::Var hidden = tape.constant(Matrix::Zero(R, model_.hidden_dim));
  ad::Var loss;
  double steps = 0.0;
  for (int t = 0; t < batch.horizon; ++t) {
    Eigen::VectorXd rows(R);
    for (int r = 0; r < R; ++r) rows(r) = batch.valid(r / n, t);
    const agent::StudentOutput s =
        agent::student_forward(tape, student_, tape.constant(batch.inputs[t]), hidden);
    hidden = s.hidden;
    if (rows.sum() == 0.0) continue;
    ad::Var term = objectives::distill_loss(tape, s.estimate, tape.constant(features[t]), rows);
    loss = loss.tape == nullptr ? term : ad::add(loss, term);
    steps += 1.0;
  }
  if (loss.tape == nullptr) throw ContractViolation("StudentTrainer::train: no valid steps");
  loss = ad::scale(loss, cfg_.loss.lambda_distill / steps);
  DistillStats stats;
  stats.loss = loss.value()(0, 0);
  if (!std::isfinite(stats.loss)) throw NumericError("StudentTrainer::train: non-finite loss");
  tape.backward(loss);
  const std::vector<Parameter*> params = student_.parameters();
  std::vector<Matrix> grads;
  for (const Parameter* p : params) grads.push_back(tape.param_grad(*p));
  check_finite(grads, "StudentTrainer::train");
  stats.grad_norm = clip_grad_norm(grads, cfg_.training.grad_clip);
  optimizer_.step(params, grads);
  return stats;
}

}  // namespace bgc::learner

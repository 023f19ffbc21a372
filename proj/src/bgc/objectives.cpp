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

#include "bgc/objectives.hpp"

#include <cmath>

#include "bgc/errors.hpp"

namespace bgc::objectives {
namespace {

// KL between rows i of (mp, lp) and j of (mq, lq); lp, lq are log-variances.
template <typename A, typename B, typename C, typename D>
double kl_rows(const A& mp, const B& lp, const C& mq, const D& lq) {
  double kl = 0.0;
  for (Eigen::Index d = 0; d < mp.size(); ++d) {
    const double diff = mp(d) - mq(d);
    kl += 0.5 * (lq(d) - lp(d)) + (std::exp(lp(d)) + diff * diff) / (2.0 * std::exp(lq(d))) -
          0.5;
  }
  return kl;
}

}  // namespace

double kl_diag_gaussian(const BeliefDistribution& p, const BeliefDistribution& q) {
  if (p.mean.size() != q.mean.size() || p.log_variance.size() != p.mean.size() ||
      q.log_variance.size() != q.mean.size()) {
    throw ContractViolation("kl_diag_gaussian: dimension mismatch");
  }
  return kl_rows(p.mean, p.log_variance, q.mean, q.log_variance);
}

std::vector<std::pair<int, int>> non_adjacent_pairs(const topology::AdjacencyMask& mask,
                                                    int offset) {
  std::vector<std::pair<int, int>> pairs;
  const int n = mask.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !mask(i, j) && !mask(j, i)) pairs.emplace_back(i + offset, j + offset);
  return pairs;
}

double split_loss(const std::vector<BeliefDistribution>& beliefs,
                  const topology::AdjacencyMask& mask, double delta) {
  if (static_cast<int>(beliefs.size()) != mask.size()) {
    throw ContractViolation("split_loss: belief count differs from mask size");
  }
  double loss = 0.0;
  for (const auto& [i, j] : non_adjacent_pairs(mask)) {
    loss += std::max(delta - kl_diag_gaussian(beliefs[i], beliefs[j]), 0.0);
  }
  return loss;
}

Var split_loss(Tape& t, Var mean, Var log_var, const std::vector<std::pair<int, int>>& pairs,
               double delta) {
  const Matrix& m = mean.value();
  const Matrix& lv = log_var.value();
  if (m.rows() != lv.rows() || m.cols() != lv.cols()) {
    throw ContractViolation("split_loss: mean and log-variance shapes differ");
  }
  Matrix out(1, 1);
  out(0, 0) = 0.0;
  std::vector<std::pair<int, int>> active;
  for (const auto& [i, j] : pairs) {
    const double kl = kl_rows(m.row(i), lv.row(i), m.row(j), lv.row(j));
    if (delta - kl > 0.0) {
      out(0, 0) += delta - kl;
      active.emplace_back(i, j);
    }
  }
  const int im = mean.id, il = log_var.id;
  return t.push(std::move(out), {mean, log_var}, [im, il, active](Tape& tp, int self) {
    const double g = tp.upstream(self)(0, 0);
    const Matrix& mv = tp.value(im);
    const Matrix& lvv = tp.value(il);
    Matrix gm = Matrix::Zero(mv.rows(), mv.cols());
    Matrix gl = Matrix::Zero(lvv.rows(), lvv.cols());
    // d(delta - KL)/d* = -dKL/d*; only pairs inside the hinge contribute.
    for (const auto& [i, j] : active) {
      for (Eigen::Index d = 0; d < mv.cols(); ++d) {
        const double var_p = std::exp(lvv(i, d));
        const double var_q = std::exp(lvv(j, d));
        const double diff = mv(i, d) - mv(j, d);
        gm(i, d) -= g * diff / var_q;
        gm(j, d) += g * diff / var_q;
        gl(i, d) -= g * (-0.5 + var_p / (2.0 * var_q));
        gl(j, d) -= g * (0.5 - (var_p + diff * diff) / (2.0 * var_q));
      }
    }
    tp.accumulate(im, gm);
    tp.accumulate(il, gl);
  });
}

Matrix td_targets(const Matrix& rewards, const Matrix& terminated, const Matrix& next_q,
                  double gamma) {
  if (rewards.rows() != terminated.rows() || rewards.cols() != terminated.cols() ||
      rewards.rows() != next_q.rows() || rewards.cols() != next_q.cols()) {
    throw ContractViolation("td_targets: shape mismatch");
  }
  return (rewards.array() + gamma * (1.0 - terminated.array()) * next_q.array()).matrix();
}

Var td_loss(Tape& t, Var q_taken, const Matrix& targets, const Matrix& valid) {
  const Matrix& q = q_taken.value();
  if (q.rows() != targets.rows() || q.cols() != targets.cols() || q.rows() != valid.rows() ||
      q.cols() != valid.cols()) {
    throw ContractViolation("td_loss: shape mismatch");
  }
  const double count = valid.sum();
  if (count <= 0.0) throw ContractViolation("td_loss: no valid steps");
  Var err = ad::mul(ad::sub(q_taken, t.constant(targets)), t.constant(valid));
  return ad::scale(ad::sum(ad::square(err)), 1.0 / count);
}

Var distill_loss(Tape& t, Var student, Var teacher, const Eigen::VectorXd& valid_rows) {
  const Matrix& s = student.value();
  const Matrix& g = teacher.value();
  if (s.rows() != g.rows() || s.cols() != g.cols() || valid_rows.size() != s.rows()) {
    throw ContractViolation("distill_loss: shape mismatch");
  }
  const double count = valid_rows.sum() * static_cast<double>(s.cols());
  if (count <= 0.0) throw ContractViolation("distill_loss: no valid rows");
  Var detached = t.constant(g);
  Matrix weights = valid_rows.replicate(1, s.cols());
  Var err = ad::mul(ad::sub(student, detached), t.constant(std::move(weights)));
  return ad::scale(ad::sum(ad::square(err)), 1.0 / count);
}

LossBreakdown total_loss(double td, double split, double distill, double lambda_split,
                         double lambda_distill) {
  if (lambda_split < 0.0 || lambda_distill < 0.0) {
    throw ContractViolation("total_loss: loss weights must be >= 0");
  }
  LossBreakdown b;
  b.td = td;
  b.split = split;
  b.distill = distill;
  b.lambda_split = lambda_split;
  b.lambda_distill = lambda_distill;
  b.total = td + lambda_split * split + lambda_distill * distill;
  return b;
}

Var total_loss(Var td, Var split, double lambda_split) {
  if (lambda_split < 0.0) throw ContractViolation("total_loss: loss weights must be >= 0");
  return ad::add(td, ad::scale(split, lambda_split));
}

}  // namespace bgc::objectives

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

#ifndef BGC_OBJECTIVES_HPP_
#define BGC_OBJECTIVES_HPP_

// Loss terms: temporal-difference loss, the belief split loss, and the
// student distillation loss.

#include <utility>
#include <vector>

#include "bgc/autodiff.hpp"
#include "bgc/belief_agent.hpp"
#include "bgc/topology.hpp"

namespace bgc::objectives {

using ad::Matrix;
using ad::Tape;
using ad::Var;
using agent::BeliefDistribution;

// Closed-form KL(p || q) between diagonal Gaussians.
double kl_diag_gaussian(const BeliefDistribution& p, const BeliefDistribution& q);

// Ordered pairs (i, j), i != j, that are not neighbours in either direction.
// Indices are shifted by `offset` so pairs from several teams can share one
// batch matrix.
std::vector<std::pair<int, int>> non_adjacent_pairs(const topology::AdjacencyMask& mask,
                                                    int offset = 0);

// sum over ordered non-adjacent pairs of max(delta - KL(b_i || b_j), 0).
double split_loss(const std::vector<BeliefDistribution>& beliefs,
                  const topology::AdjacencyMask& mask, double delta);

// Differentiable split loss over rows of (mean, log_var); returns 1 x 1.
Var split_loss(Tape& t, Var mean, Var log_var,
               const std::vector<std::pair<int, int>>& pairs, double delta);

// y = r + gamma * (1 - terminated) * next_q, elementwise.
Matrix td_targets(const Matrix& rewards, const Matrix& terminated, const Matrix& next_q,
                  double gamma);

// Mean of (q - y)^2 over entries where valid == 1. All arguments share shape.
Var td_loss(Tape& t, Var q_taken, const Matrix& targets, const Matrix& valid);

// Mean squared error over valid rows (and all columns). The teacher is read
// as a constant: no gradient flows back into it.
Var distill_loss(Tape& t, Var student, Var teacher, const Eigen::VectorXd& valid_rows);

struct LossBreakdown {
  double td = 0.0;
  double split = 0.0;
  double distill = 0.0;
  double total = 0.0;
  double lambda_split = 0.0;
  double lambda_distill = 0.0;
};

// total = td + lambda_split * split + lambda_distill * distill.
LossBreakdown total_loss(double td, double split, double distill, double lambda_split,
                         double lambda_distill);

// Differentiable counterpart of total_loss.
Var total_loss(Var td, Var split, double lambda_split);

}  // namespace bgc::objectives

#endif  // BGC_OBJECTIVES_HPP_

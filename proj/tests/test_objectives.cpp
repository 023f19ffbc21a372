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


#include <cmath>
#include <random>

#include "doctest.h"

#include "bgc/errors.hpp"
#include "bgc/objectives.hpp"
#include "support/numerical_suite.hpp"
#include "support/oracles.hpp"

using namespace bgc;
using namespace bgc::objectives;
using agent::BeliefDistribution;
using topology::AdjacencyMask;
using topology::BoolMatrix;

namespace {

BeliefDistribution gauss1(double mu, double sigma) {
  return {Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, 2.0 * std::log(sigma))};
}

Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

AdjacencyMask identity_mask(int n) {
  BoolMatrix m = BoolMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) m(i, i) = true;
  return {m};
}

}  // namespace

TEST_CASE("KL closed-form examples") {
  const BeliefDistribution p = gauss1(0.3, 1.7);
  CHECK(kl_diag_gaussian(p, p) == 0.0);
  CHECK(kl_diag_gaussian(gauss1(1, 1), gauss1(0, 1)) == doctest::Approx(0.5));
  const double want = std::log(0.5) + 2.0 - 0.5;
  CHECK(kl_diag_gaussian(gauss1(0, 2), gauss1(0, 1)) == doctest::Approx(want).epsilon(1e-14));
  CHECK(want == doctest::Approx(0.80685).epsilon(1e-5));
  CHECK(std::abs(testing::kl_by_integration(0, 2, 0, 1) - want) < 1e-8);
}

TEST_CASE("KL agrees with numeric integration") {
  const testing::CheckResult r = testing::kl_integration_check(99, 100);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("KL is nonnegative and asymmetric") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    BeliefDistribution p{randn(4, 1, rng).col(0), randn(4, 1, rng).col(0)};
    BeliefDistribution q{randn(4, 1, rng).col(0), randn(4, 1, rng).col(0)};
    CHECK(kl_diag_gaussian(p, q) >= 0.0);
  }
  const double a = kl_diag_gaussian(gauss1(0, 2), gauss1(0, 1));
  const double b = kl_diag_gaussian(gauss1(0, 1), gauss1(0, 2));
  CHECK(a != doctest::Approx(b));
  CHECK_THROWS_AS(kl_diag_gaussian(gauss1(0, 1), BeliefDistribution{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}),
                  ContractViolation);
}

TEST_CASE("split loss examples") {
  const BeliefDistribution b = gauss1(0.2, 0.7);
  CHECK(split_loss({b, b, b}, AdjacencyMask{BoolMatrix::Constant(3, 3, true)}, 0.005) == 0.0);
  CHECK(split_loss({b, b}, identity_mask(2), 0.005) == doctest::Approx(0.01).epsilon(1e-15));
  // Far apart beliefs: every KL exceeds delta.
  CHECK(split_loss({gauss1(0, 1), gauss1(5, 1), gauss1(-5, 1)}, identity_mask(3), 0.005) == 0.0);
  // One-directional edges still count as adjacent.
  BoolMatrix directed = identity_mask(2).mask;
  directed(0, 1) = true;
  CHECK(split_loss({b, b}, AdjacencyMask{directed}, 0.005) == 0.0);
}

TEST_CASE("split loss matches the brute-force oracle") {
  const testing::CheckResult r = testing::split_oracle_check(1234, 500);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("split loss is zero iff every non-adjacent KL clears delta") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dl(0.01, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<BeliefDistribution> beliefs;
    for (int i = 0; i < 5; ++i) beliefs.push_back({randn(2, 1, rng).col(0), randn(2, 1, rng, 0.3).col(0)});
    BoolMatrix m = identity_mask(5).mask;
    std::bernoulli_distribution e(0.3);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) m(i, j) = m(j, i) = e(rng);
    const AdjacencyMask mask{m};
    const double delta = dl(rng);
    bool feasible = true;
    for (auto [i, j] : non_adjacent_pairs(mask)) feasible = feasible && kl_diag_gaussian(beliefs[i], beliefs[j]) >= delta;
    const double loss = split_loss(beliefs, mask, delta);
    CHECK(loss >= 0.0);
    CHECK((loss == 0.0) == feasible);
  }
}

TEST_CASE("split gradient vanishes for inactive pairs") {
  // Agents 0,1 are close (active hinge), 2 is far from both (inactive).
  Matrix mean(3, 2), lv = Matrix::Zero(3, 2);
  mean << 0.0, 0.0, 0.01, 0.0, 9.0, 9.0;
  ad::Parameter pm{"m", mean}, pl{"lv", lv};
  Tape t;
  const auto pairs = non_adjacent_pairs(identity_mask(3));
  const ad::Var loss = split_loss(t, t.param(pm), t.param(pl), pairs, 0.005);
  CHECK(loss.value()(0, 0) > 0.0);
  t.backward(loss);
  CHECK(t.param_grad(pm).row(2).isZero(0.0));
  CHECK(t.param_grad(pl).row(2).isZero(0.0));
  CHECK_FALSE(t.param_grad(pm).row(0).isZero(0.0));
}

TEST_CASE("objective gradients match finite differences") {
  for (const testing::CheckResult& r : testing::gradcheck_suite(55)) {
    if (r.name.find("loss") == std::string::npos) continue;
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("TD targets: discount collapse and termination") {
  Matrix r(1, 3), term(1, 3), next(1, 3);
  r << 0.5, -1.0, 2.0;
  term << 0, 0, 1;
  next << 10, 20, 30;
  CHECK(td_targets(r, term, next, 0.0) == r);
  const Matrix y = td_targets(r, term, next, 0.9);
  CHECK(y(0, 0) == doctest::Approx(0.5 + 9.0));
  CHECK(y(0, 1) == doctest::Approx(-1.0 + 18.0));
  CHECK(y(0, 2) == 2.0);
}

TEST_CASE("TD loss on a hand-built two-step tabular episode") {
  // One agent, two states, Q tables frozen: Q(s0,a)=(1,2), Q(s1,a)=(0.5,3).
  // The agent takes a=0 in s0 and a=1 in s1; the episode ends after s1.
  // r = (0, 1), gamma = 0.9, greedy-by-target next value in s1 is 3.
  const double gamma = 0.9;
  Matrix rewards(1, 2), term(1, 2), next(1, 2), q_taken(1, 2);
  rewards << 0.0, 1.0;
  term << 0, 1;
  next << 3.0, 0.0;
  q_taken << 1.0, 3.0;
  const Matrix y = td_targets(rewards, term, next, gamma);
  Tape t;
  const double loss = td_loss(t, t.constant(q_taken), y, Matrix::Ones(1, 2)).value()(0, 0);
  const double want = (std::pow(1.0 - 2.7, 2) + std::pow(3.0 - 1.0, 2)) / 2.0;
  CHECK(loss == doctest::Approx(want).epsilon(1e-15));

  // Padding is ignored.
  Matrix valid(1, 2);
  valid << 1, 0;
  CHECK(td_loss(t, t.constant(q_taken), y, valid).value()(0, 0) == doctest::Approx(std::pow(1.7, 2)));
  CHECK_THROWS_AS(td_loss(t, t.constant(q_taken), y, Matrix::Zero(1, 2)), ContractViolation);
}

TEST_CASE("one gradient step lowers the TD loss on a frozen table") {
  std::mt19937_64 rng(4);
  ad::Parameter q{"q", randn(4, 6, rng)};
  const Matrix y = randn(4, 6, rng);
  const Matrix valid = Matrix::Ones(4, 6);
  Tape t;
  const ad::Var loss = td_loss(t, t.param(q), y, valid);
  t.backward(loss);
  const double before = loss.value()(0, 0);
  q.value -= 0.1 * t.param_grad(q);
  Tape t2(false);
  CHECK(td_loss(t2, t2.param(q), y, valid).value()(0, 0) < before);
}

TEST_CASE("distillation loss examples and stop-gradient") {
  std::mt19937_64 rng(6);
  const Matrix g = randn(3, 32, rng);
  Tape t;
  CHECK(distill_loss(t, t.constant(g), t.constant(g), Eigen::VectorXd::Ones(3)).value()(0, 0) == 0.0);
  CHECK(distill_loss(t, t.constant(Matrix::Ones(3, 32)), t.constant(Matrix::Zero(3, 32)), Eigen::VectorXd::Ones(3))
            .value()(0, 0) == doctest::Approx(1.0));

  ad::Parameter student{"s", randn(3, 32, rng)}, teacher{"g", randn(3, 32, rng)};
  Tape tg;
  Eigen::VectorXd rows = Eigen::VectorXd::Ones(3);
  rows(2) = 0.0;
  const ad::Var loss = distill_loss(tg, tg.param(student), tg.param(teacher), rows);
  tg.backward(loss);
  CHECK(tg.param_grad(teacher).norm() == 0.0);
  CHECK(tg.param_grad(student).norm() > 0.0);
  CHECK(tg.param_grad(student).row(2).isZero(0.0));
}

TEST_CASE("total loss combinations") {
  CHECK(total_loss(1.5, 7.0, 0.0, 0.0, 1.0).total == 1.5);
  CHECK(total_loss(1.0, 2.0, 0.0, 0.1, 1.0).total == doctest::Approx(1.2));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double td = u(rng), sp = u(rng), di = u(rng), ls = u(rng), ld = u(rng);
    const LossBreakdown b = total_loss(td, sp, di, ls, ld);
    CHECK(b.total == doctest::Approx(b.td + b.lambda_split * b.split + b.lambda_distill * b.distill));
    CHECK(b.td == td);
    CHECK(b.split == sp);
  }
  CHECK_THROWS_AS(total_loss(1.0, 1.0, 0.0, -0.1, 1.0), ContractViolation);
  Tape t;
  Matrix a(1, 1), c(1, 1);
  a << 1.0;
  c << 2.0;
  CHECK(total_loss(t.constant(a), t.constant(c), 0.1).value()(0, 0) == doctest::Approx(1.2));
}

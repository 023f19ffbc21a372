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


#include <random>

#include "doctest.h"

#include "bgc/errors.hpp"
#include "bgc/mixers.hpp"
#include "support/numerical_suite.hpp"

using namespace bgc;
using namespace bgc::mixers;
using ad::Matrix;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

double qmix_value(const MixerParams& p, const Matrix& q, const Matrix& s) {
  Tape t(false);
  return qmix_mix(t, t.constant(q), t.constant(s), p).value()(0, 0);
}

}  // namespace

TEST_CASE("VDN sums agent utilities") {
  Tape t;
  Matrix q(2, 3);
  q << 1, 2, 3, 0, 0, 0;
  ad::Parameter qp{"q", q};
  const ad::Var out = vdn_mix(t, t.param(qp));
  CHECK(out.value()(0, 0) == 6.0);
  CHECK(out.value()(1, 0) == 0.0);
  t.backward(ad::sum(out));
  CHECK(t.param_grad(qp) == Matrix::Ones(2, 3));
}

TEST_CASE("QMIX with zeroed hypernetworks outputs zero") {
  MixerConfig c{MixerKind::kQmix, 3, 7, 16};
  MixerParams p = MixerParams::init(c, 1);
  for (ad::Parameter* w : p.parameters()) w->value.setZero();
  std::mt19937_64 rng(2);
  CHECK(qmix_value(p, randn(1, 3, rng), randn(1, 7, rng)) == 0.0);
}

TEST_CASE("QMIX is monotone under +0.01 probes") {
  const testing::CheckResult r = testing::qmix_monotonicity_check(5, 100);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("QMIX partial derivatives are nonnegative") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    MixerConfig c{MixerKind::kQmix, 4, 9, 32};
    const MixerParams p = MixerParams::init(c, rng());
    ad::Parameter q{"q", randn(6, 4, rng, 3.0)};
    Tape t;
    const ad::Var out = qmix_mix(t, t.param(q), t.constant(randn(6, 9, rng)), p);
    t.backward(ad::sum(out));
    CHECK(t.param_grad(q).minCoeff() >= 0.0);
  }
}

TEST_CASE("QMIX reduces to VDN with unit weights and zero biases") {
  // One hidden unit; ELU is the identity on the nonnegative sums used here.
  MixerConfig c{MixerKind::kQmix, 3, 5, 1};
  MixerParams p = MixerParams::init(c, 3);
  for (ad::Parameter* w : p.parameters()) w->value.setZero();
  p.hyper_w1.bias.value.setOnes();
  p.hyper_w2.bias.value.setOnes();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix q(1, 3);
    for (int i = 0; i < 3; ++i) q(0, i) = u(rng);
    Tape t(false);
    const double vdn = vdn_mix(t, t.constant(q)).value()(0, 0);
    CHECK(qmix_value(p, q, randn(1, 5, rng)) == doctest::Approx(vdn).epsilon(1e-14));
  }
}

TEST_CASE("per-agent argmax maximises the mixed value") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const int actions = 2 + trial % 3;
    MixerConfig c{MixerKind::kQmix, n, 6, 16};
    const MixerParams p = MixerParams::init(c, rng());
    const Matrix table = randn(n, actions, rng);
    const Matrix state = randn(1, 6, rng);
    Matrix greedy(1, n);
    for (int i = 0; i < n; ++i) greedy(0, i) = table.row(i).maxCoeff();
    const double best = qmix_value(p, greedy, state);
    int joint_count = 1;
    for (int i = 0; i < n; ++i) joint_count *= actions;
    for (int code = 0; code < joint_count; ++code) {
      Matrix q(1, n);
      int rest = code;
      for (int i = 0; i < n; ++i) {
        q(0, i) = table(i, rest % actions);
        rest /= actions;
      }
      CHECK(qmix_value(p, q, state) <= best);
      Tape t(false);
      CHECK(vdn_mix(t, t.constant(q)).value()(0, 0) <= greedy.sum());
    }
  }
}

TEST_CASE("mixer gradients match finite differences") {
  for (const testing::CheckResult& r : testing::gradcheck_suite(31)) {
    if (r.name != "gradcheck QMIX" && r.name != "gradcheck VDN") continue;
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("QMIX shape and kind contracts") {
  MixerConfig c{MixerKind::kQmix, 3, 5, 8};
  const MixerParams p = MixerParams::init(c, 1);
  Tape t(false);
  CHECK_THROWS_AS(qmix_mix(t, t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(3, 5)), p),
                  ContractViolation);
  const MixerParams v = MixerParams::init({MixerKind::kVdn, 3, 5, 8}, 1);
  CHECK(v.parameters().empty());
  CHECK_THROWS_AS(qmix_mix(t, t.constant(Matrix::Zero(1, 3)), t.constant(Matrix::Zero(1, 5)), v),
                  ContractViolation);
  CHECK(mix(t, t.constant(Matrix::Ones(1, 3)), t.constant(Matrix::Zero(1, 5)), v).value()(0, 0) == 3.0);
}

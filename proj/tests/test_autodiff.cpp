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


#include <functional>
#include <random>

#include "doctest.h"

#include "bgc/autodiff.hpp"
#include "support/numerical_suite.hpp"

using namespace bgc;
using namespace bgc::ad;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

// Keeps values away from the kinks of relu/abs/clamp so central differences
// are well defined.
Matrix away_from_kinks(Matrix m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (std::abs(m(i)) < 0.05) m(i) += m(i) < 0 ? -0.1 : 0.1;
  return m;
}

void check_unary(const char* name, const std::function<Var(Var)>& op) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter x{"x", away_from_kinks(randn(3, 4, rng))};
    const Matrix w = randn(3, 4, rng);
    const double err = testing::gradcheck(
        [&](Tape& t) { return sum(mul(op(t.param(x)), t.constant(w))); }, {&x});
    INFO(name);
    CHECK(err <= testing::kGradTolerance);
  }
}

}  // namespace

TEST_CASE("elementwise op gradients") {
  check_unary("relu", [](Var a) { return relu(a); });
  check_unary("leaky_relu", [](Var a) { return leaky_relu(a, 0.2); });
  check_unary("elu", [](Var a) { return elu(a); });
  check_unary("tanh", [](Var a) { return tanh(a); });
  check_unary("sigmoid", [](Var a) { return sigmoid(a); });
  check_unary("exp", [](Var a) { return exp(a); });
  check_unary("abs", [](Var a) { return abs(a); });
  check_unary("square", [](Var a) { return square(a); });
  check_unary("clamp", [](Var a) { return clamp(a, -0.8, 0.9); });
  check_unary("scale", [](Var a) { return scale(a, -2.5); });
  check_unary("add_scalar", [](Var a) { return add_scalar(a, 3.0); });
  check_unary("reshape", [](Var a) { return reshape(reshape(a, 6, 2), 3, 4); });
  check_unary("slice+concat", [](Var a) { return concat_cols({slice_cols(a, 2, 2), slice_cols(a, 0, 2)}); });
  check_unary("gather", [](Var a) {
    return concat_cols({gather_cols(a, {0, 3, 3}), gather_cols(a, {1, 1, 2}), gather_cols(a, {2, 0, 1}),
                        gather_cols(a, {0, 0, 0})});
  });
}

TEST_CASE("binary and reduction op gradients") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter a{"a", randn(3, 4, rng)}, b{"b", randn(4, 2, rng)}, c{"c", randn(3, 4, rng)};
    Parameter row{"row", randn(1, 4, rng)};
    const double err = testing::gradcheck(
        [&](Tape& t) {
          Var x = add_row(mul(add(t.param(a), t.param(c)), sub(t.param(a), t.param(c))), t.param(row));
          Var y = matmul(x, t.param(b));
          return add(mean(square(y)), sum(row_sum(x)));
        },
        {&a, &b, &c, &row});
    CHECK(err <= testing::kGradTolerance);
  }
}

TEST_CASE("batched vector-matrix product") {
  std::mt19937_64 rng(12);
  Parameter x{"x", randn(3, 2, rng)}, w{"w", randn(3, 2 * 5, rng)};
  Tape t(false);
  const Matrix out = batched_vecmat(t.param(x), t.param(w), 5).value();
  for (int r = 0; r < 3; ++r)
    for (int o = 0; o < 5; ++o)
      CHECK(out(r, o) == doctest::Approx(x.value(r, 0) * w.value(r, o) + x.value(r, 1) * w.value(r, 5 + o)));
  const Matrix wt = randn(3, 5, rng);
  CHECK(testing::gradcheck([&](Tape& tt) { return sum(mul(batched_vecmat(tt.param(x), tt.param(w), 5), tt.constant(wt))); },
                           {&x, &w}) <= testing::kGradTolerance);
}

TEST_CASE("masked attention gradients") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    BoolMatrix mask = BoolMatrix::Constant(n, n, false);
    std::bernoulli_distribution e(0.5);
    for (int i = 0; i < n; ++i) {
      mask(i, i) = true;
      for (int j = 0; j < n; ++j) mask(i, j) = mask(i, j) || e(rng);
    }
    Parameter src{"s", randn(n, 1, rng)}, dst{"d", randn(n, 1, rng)}, val{"v", randn(n, 3, rng)};
    const Matrix w = randn(n, 3, rng);
    const double err = testing::gradcheck(
        [&](Tape& t) {
          return sum(mul(masked_attention(t.param(src), t.param(dst), t.param(val), mask, 0.2), t.constant(w)));
        },
        {&src, &dst, &val});
    CHECK(err <= testing::kGradTolerance);
  }
}

TEST_CASE("gradients accumulate over reuse and unreached nodes get zeros") {
  Parameter a{"a", Matrix::Constant(1, 1, 3.0)}, unused{"u", Matrix::Ones(2, 2)};
  Tape t;
  Var x = t.param(a);
  t.param(unused);
  const Var y = add(mul(x, x), x);  // y = a^2 + a
  t.backward(y);
  CHECK(t.param_grad(a)(0, 0) == 7.0);
  CHECK(t.param_grad(unused).isZero(0.0));
}

TEST_CASE("forward-only tape records nothing to differentiate") {
  Tape t(false);
  CHECK_FALSE(t.records());
  Parameter a{"a", Matrix::Ones(2, 2)};
  const Var y = sum(t.param(a));
  CHECK(y.value()(0, 0) == 4.0);
}

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

#ifndef BGC_AUTODIFF_HPP_
#define BGC_AUTODIFF_HPP_

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation applied to its Vars. Parameters are leaves
// referenced by pointer (never copied), so a Tape built on const parameters
// can run concurrently with other Tapes reading the same parameters. Gradients
// are kept on the Tape and read back per Parameter after backward(); the
// Parameters themselves are never mutated by differentiation.
//
// Row convention: a batch of vectors is a matrix with one vector per row, and
// dense layers compute X * W + b with W shaped (in x out).

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bgc::ad {

using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Parameter {
  std::string name;
  Matrix value;
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  // When record_gradients is false no backward closures are kept; the tape is
  // then a plain forward evaluator.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(const Parameter& p);

  const Matrix& value(int id) const;
  const Matrix& value(Var v) const { return value(v.id); }

  // Gradient of the last backward() target w.r.t. a node; zeros if unreached.
  Matrix grad(Var v) const;
  Matrix param_grad(const Parameter& p) const;

  void backward(Var loss);

  bool records() const { return record_; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations. The backward closure of a node reads its
  // incoming gradient through upstream(self) and pushes into its inputs with
  // accumulate().
  Var push(Matrix value, std::span<const Var> inputs, Backward fn);
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward fn) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
  }
  const Matrix& upstream(int self) const { return nodes_[self].grad; }
  void accumulate(int id, const Matrix& g);

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> params_;
};

// Elementwise and linear-algebra operations. Shapes must agree exactly unless
// noted; violations throw std::invalid_argument.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var a, Var row);  // row is 1 x cols(a), broadcast over rows
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var elu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var abs(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
// Reinterpret in row-major element order.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);

Var sum(Var a);      // 1 x 1
Var mean(Var a);     // 1 x 1
Var row_sum(Var a);  // rows x 1

// out(r) = a(r, index[r]).
Var gather_cols(Var a, const std::vector<int>& index);

// Per-row vector-matrix product. x is (R x I); w is (R x I*O) holding, per
// row, an (I x O) matrix in row-major order. Returns (R x O).
Var batched_vecmat(Var x, Var w, Eigen::Index out_dim);

// Masked attention aggregation:
//   e_ij     = src_i + dst_j                         for mask(i, j)
//   alpha_ij = softmax_j(LeakyReLU(e_ij, slope))     over mask row i
//   out_i    = sum_j alpha_ij * values_j
// src and dst are (R x 1), values (R x F), mask (R x R) with every row holding
// at least one true entry. If alpha_out is non-null it receives the
// coefficients (exact zeros off-mask).
Var masked_attention(Var src, Var dst, Var values, const BoolMatrix& mask,
                     double slope, Matrix* alpha_out = nullptr);

}  // namespace bgc::ad

#endif  // BGC_AUTODIFF_HPP_

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

#include "bgc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bgc::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.own = std::move(value);
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const Parameter& p) {
  if (auto it = params_.find(&p); it != params_.end()) {
    return Var{this, it->second};
  }
  Node& n = nodes_.emplace_back();
  n.external = &p.value;
  n.requires_grad = record_;
  const int id = static_cast<int>(nodes_.size() - 1);
  params_.emplace(&p, id);
  return Var{this, id};
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.own;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  const Matrix& val = value(v.id);
  return Matrix::Zero(val.rows(), val.cols());
}

Matrix Tape::param_grad(const Parameter& p) const {
  auto it = params_.find(&p);
  if (it == params_.end()) return Matrix::Zero(p.value.rows(), p.value.cols());
  return grad(Var{const_cast<Tape*>(this), it->second});
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward fn) {
  bool needs = false;
  if (record_) {
    for (const Var& in : inputs) {
      if (in.tape != this) throw std::invalid_argument("ad: mixing tapes");
      needs = needs || nodes_[in.id].requires_grad;
    }
  }
  Node& n = nodes_.emplace_back();
  n.own = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("ad: backward on a non-recording tape");
  const Matrix& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("ad: backward target must be 1x1");
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss.id, Matrix::Ones(1, 1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("ad: shape mismatch in ") + op +
                                ": " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

const Matrix& upstream(Tape& t, int self) { return t.upstream(self); }

template <typename F>
Var unary(Var a, Matrix out, F&& local_grad) {
  Tape& t = *a.tape;
  const int ia = a.id;
  return t.push(std::move(out), {a},
                [ia, local_grad](Tape& tp, int self) {
                  const Matrix& g = upstream(tp, self);
                  tp.accumulate(ia, local_grad(tp, self, g));
                });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("ad: matmul inner dimension mismatch (" +
                                std::to_string(av.cols()) + " vs " +
                                std::to_string(bv.rows()) + ")");
  }
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  const int ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = upstream(t, self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value() + b.value(), {a, b},
                      [ia, ib](Tape& t, int self) {
                        const Matrix& g = upstream(t, self);
                        t.accumulate(ia, g);
                        t.accumulate(ib, g);
                      });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value() - b.value(), {a, b},
                      [ia, ib](Tape& t, int self) {
                        const Matrix& g = upstream(t, self);
                        t.accumulate(ia, g);
                        t.accumulate(ib, -g);
                      });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value().cwiseProduct(b.value()), {a, b},
                      [ia, ib](Tape& t, int self) {
                        const Matrix& g = upstream(t, self);
                        if (t.requires_grad(ia))
                          t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                        if (t.requires_grad(ib))
                          t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                      });
}

Var add_row(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw std::invalid_argument("ad: add_row expects a 1x" +
                                std::to_string(av.cols()) + " row");
  }
  Matrix out = av.rowwise() + rv.row(0);
  const int ia = a.id, ir = row.id;
  return a.tape->push(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    const Matrix& g = upstream(t, self);
    t.accumulate(ia, g);
    if (t.requires_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var scale(Var a, double s) {
  return unary(a, a.value() * s,
               [s](Tape&, int, const Matrix& g) -> Matrix { return g * s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, (a.value().array() + s).matrix(),
               [](Tape&, int, const Matrix& g) -> Matrix { return g; });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  const int ia = a.id;
  return unary(a, std::move(out), [ia](Tape& t, int, const Matrix& g) -> Matrix {
    return (t.value(ia).array() > 0.0).select(g, 0.0);
  });
}

Var leaky_relu(Var a, double slope) {
  const Matrix& x = a.value();
  Matrix out = (x.array() > 0.0).select(x, x * slope);
  const int ia = a.id;
  return unary(a, std::move(out),
               [ia, slope](Tape& t, int, const Matrix& g) -> Matrix {
                 return (t.value(ia).array() > 0.0).select(g, g * slope);
               });
}

Var elu(Var a) {
  const Matrix& x = a.value();
  Matrix out = (x.array() > 0.0).select(x, (x.array().exp() - 1.0).matrix());
  const int ia = a.id;
  return unary(a, std::move(out), [ia](Tape& t, int, const Matrix& g) -> Matrix {
    const Matrix& xv = t.value(ia);
    return (xv.array() > 0.0).select(g, (g.array() * xv.array().exp()).matrix());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  Tape& t = *a.tape;
  const int ia = a.id;
  return t.push(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = upstream(tp, self);
    const Matrix& y = tp.value(self);
    tp.accumulate(ia, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Tape& t = *a.tape;
  const int ia = a.id;
  return t.push(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = upstream(tp, self);
    const Matrix& y = tp.value(self);
    tp.accumulate(ia, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  Tape& t = *a.tape;
  const int ia = a.id;
  return t.push(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = upstream(tp, self);
    tp.accumulate(ia, g.cwiseProduct(tp.value(self)));
  });
}

Var abs(Var a) {
  Matrix out = a.value().cwiseAbs();
  const int ia = a.id;
  return unary(a, std::move(out), [ia](Tape& t, int, const Matrix& g) -> Matrix {
    const Matrix& x = t.value(ia);
    return (x.array() > 0.0).select(g, (x.array() < 0.0).select(-g, 0.0));
  });
}

Var square(Var a) {
  Matrix out = a.value().array().square().matrix();
  const int ia = a.id;
  return unary(a, std::move(out), [ia](Tape& t, int, const Matrix& g) -> Matrix {
    return 2.0 * g.cwiseProduct(t.value(ia));
  });
}

Var clamp(Var a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  const int ia = a.id;
  return unary(a, std::move(out),
               [ia, lo, hi](Tape& t, int, const Matrix& g) -> Matrix {
                 const auto x = t.value(ia).array();
                 return ((x >= lo) && (x <= hi)).select(g, 0.0);
               });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("ad: concat of nothing");
  Tape& t = *parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("ad: concat row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  return t.push(std::move(out), std::span<const Var>(parts),
                [ids, widths](Tape& tp, int self) {
                  const Matrix& g = upstream(tp, self);
                  Eigen::Index o = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    tp.accumulate(ids[k], g.middleCols(o, widths[k]));
                    o += widths[k];
                  }
                });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("ad: slice out of range");
  }
  Matrix out = a.value().middleCols(start, count);
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return unary(a, std::move(out),
               [rows, cols, start, count](Tape&, int, const Matrix& g) -> Matrix {
                 Matrix full = Matrix::Zero(rows, cols);
                 full.middleCols(start, count) = g;
                 return full;
               });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& x = a.value();
  if (rows * cols != x.size()) throw std::invalid_argument("ad: reshape size");
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor xr = x;
  Matrix out = Eigen::Map<const RowMajor>(xr.data(), rows, cols);
  const Eigen::Index r0 = x.rows(), c0 = x.cols();
  return unary(a, std::move(out), [r0, c0](Tape&, int, const Matrix& g) -> Matrix {
    RowMajor gr = g;
    return Eigen::Map<const RowMajor>(gr.data(), r0, c0);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Eigen::Index r = a.rows(), c = a.cols();
  return unary(a, std::move(out), [r, c](Tape&, int, const Matrix& g) -> Matrix {
    return Matrix::Constant(r, c, g(0, 0));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Matrix out = a.value().rowwise().sum();
  const Eigen::Index c = a.cols();
  return unary(a, std::move(out), [c](Tape&, int, const Matrix& g) -> Matrix {
    return g.replicate(1, c);
  });
}

Var gather_cols(Var a, const std::vector<int>& index) {
  const Matrix& x = a.value();
  if (static_cast<Eigen::Index>(index.size()) != x.rows()) {
    throw std::invalid_argument("ad: gather index length");
  }
  Matrix out(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int c = index[r];
    if (c < 0 || c >= x.cols()) throw std::invalid_argument("ad: gather index");
    out(r, 0) = x(r, c);
  }
  const Eigen::Index rows = x.rows(), cols = x.cols();
  return unary(a, std::move(out),
               [index, rows, cols](Tape&, int, const Matrix& g) -> Matrix {
                 Matrix full = Matrix::Zero(rows, cols);
                 for (Eigen::Index r = 0; r < rows; ++r) full(r, index[r]) = g(r, 0);
                 return full;
               });
}

Var batched_vecmat(Var x, Var w, Eigen::Index out_dim) {
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Eigen::Index rows = xv.rows(), in = xv.cols();
  if (wv.rows() != rows || wv.cols() != in * out_dim) {
    throw std::invalid_argument("ad: batched_vecmat shape mismatch");
  }
  Matrix out = Matrix::Zero(rows, out_dim);
  for (Eigen::Index i = 0; i < in; ++i) {
    out.array() += wv.middleCols(i * out_dim, out_dim).array().colwise() *
                   xv.col(i).array();
  }
  const int ix = x.id, iw = w.id;
  return x.tape->push(
      std::move(out), {x, w}, [ix, iw, in, out_dim](Tape& t, int self) {
        const Matrix& g = upstream(t, self);
        const Matrix& xv2 = t.value(ix);
        const Matrix& wv2 = t.value(iw);
        if (t.requires_grad(ix)) {
          Matrix gx(xv2.rows(), in);
          for (Eigen::Index i = 0; i < in; ++i) {
            gx.col(i) =
                g.cwiseProduct(wv2.middleCols(i * out_dim, out_dim)).rowwise().sum();
          }
          t.accumulate(ix, gx);
        }
        if (t.requires_grad(iw)) {
          Matrix gw(wv2.rows(), wv2.cols());
          for (Eigen::Index i = 0; i < in; ++i) {
            gw.middleCols(i * out_dim, out_dim) =
                g.array().colwise() * xv2.col(i).array();
          }
          t.accumulate(iw, gw);
        }
      });
}

Var masked_attention(Var src, Var dst, Var values, const BoolMatrix& mask,
                     double slope, Matrix* alpha_out) {
  const Matrix& s = src.value();
  const Matrix& d = dst.value();
  const Matrix& v = values.value();
  const Eigen::Index n = v.rows();
  if (s.rows() != n || s.cols() != 1 || d.rows() != n || d.cols() != 1 ||
      mask.rows() != n || mask.cols() != n) {
    throw std::invalid_argument("ad: masked_attention shape mismatch");
  }
  Matrix alpha = Matrix::Zero(n, n);
  Matrix pre = Matrix::Zero(n, n);  // e_ij before LeakyReLU
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      const double e = s(i, 0) + d(j, 0);
      pre(i, j) = e;
      const double act = e > 0.0 ? e : slope * e;
      alpha(i, j) = act;
      row_max = std::max(row_max, act);
      any = true;
    }
    if (!any) throw std::invalid_argument("ad: attention row without neighbors");
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      alpha(i, j) = std::exp(alpha(i, j) - row_max);
      total += alpha(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask(i, j)) alpha(i, j) /= total;
    }
  }
  Matrix out = alpha * v;
  if (alpha_out != nullptr) *alpha_out = alpha;
  const int is = src.id, id = dst.id, iv = values.id;
  return src.tape->push(
      std::move(out), {src, dst, values},
      [is, id, iv, alpha, pre, mask, slope](Tape& t, int self) {
        const Matrix& g = upstream(t, self);
        const Matrix& vv = t.value(iv);
        if (t.requires_grad(iv)) t.accumulate(iv, alpha.transpose() * g);
        if (!t.requires_grad(is) && !t.requires_grad(id)) return;
        const Matrix dalpha = g * vv.transpose();
        const Eigen::Index m = alpha.rows();
        Matrix de = Matrix::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
          const double dot = alpha.row(i).dot(dalpha.row(i));
          for (Eigen::Index j = 0; j < m; ++j) {
            if (!mask(i, j)) continue;
            const double dact = alpha(i, j) * (dalpha(i, j) - dot);
            de(i, j) = pre(i, j) > 0.0 ? dact : slope * dact;
          }
        }
        if (t.requires_grad(is)) t.accumulate(is, de.rowwise().sum());
        if (t.requires_grad(id)) t.accumulate(id, de.colwise().sum().transpose());
      });
}

}  // namespace bgc::ad

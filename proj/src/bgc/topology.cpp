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

#include "bgc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bgc/errors.hpp"

namespace bgc::topology {

BoolMatrix knn_graph(const std::vector<env::Vec2>& positions, int k) {
  const int n = static_cast<int>(positions.size());
  if (n < 1) throw ConfigError("knn_graph: need at least one agent");
  if (k < 0 || k > n - 1) {
    throw ConfigError("knn_graph: k=" + std::to_string(k) + " must lie in [0, " +
                      std::to_string(n - 1) + "] for n=" + std::to_string(n));
  }
  BoolMatrix out = BoolMatrix::Constant(n, n, false);
  std::vector<int> order;
  std::vector<double> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Squared distance: same order as Euclidean, exact for grid coordinates.
      const double dx = positions[j].x - positions[i].x;
      const double dy = positions[j].y - positions[i].y;
      dist[j] = dx * dx + dy * dy;
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    // Partial selection on (distance, index) keeps ties deterministic.
    auto before = [&](int a, int b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    };
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), before);
    for (int r = 0; r < k; ++r) out(i, order[r]) = true;
  }
  return out;
}

AdjacencyMask symmetrize_with_self_loops(const BoolMatrix& directed) {
  if (directed.rows() != directed.cols()) {
    throw ContractViolation("symmetrize_with_self_loops: matrix must be square");
  }
  const auto n = directed.rows();
  AdjacencyMask m{BoolMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m.mask(i, j) = i == j || directed(i, j) || directed(j, i);
  return m;
}

AdjacencyMask neighbourhood_mask(const env::AgentPositions& positions, int k) {
  return symmetrize_with_self_loops(knn_graph(positions.xy, k));
}

Matrix normalized_laplacian(const AdjacencyMask& mask) {
  const int n = mask.size();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && mask(i, j)) degree(i) += 1.0;
  Matrix lap = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    if (degree(i) == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (i != j && mask(i, j) && degree(j) > 0.0) {
        lap(i, j) = -1.0 / std::sqrt(degree(i) * degree(j));
      }
    }
  }
  return lap;
}

BoolMatrix block_diagonal(const std::vector<AdjacencyMask>& masks) {
  Eigen::Index total = 0;
  for (const auto& m : masks) total += m.mask.rows();
  BoolMatrix out = BoolMatrix::Constant(total, total, false);
  Eigen::Index off = 0;
  for (const auto& m : masks) {
    const auto n = m.mask.rows();
    out.block(off, off, n, n) = m.mask;
    off += n;
  }
  return out;
}

std::vector<int> connected_components(const AdjacencyMask& mask) {
  const int n = mask.size();
  std::vector<int> label(n, -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (label[v] < 0 && (mask(u, v) || mask(v, u))) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace bgc::topology

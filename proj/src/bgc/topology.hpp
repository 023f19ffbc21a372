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

#ifndef BGC_TOPOLOGY_HPP_
#define BGC_TOPOLOGY_HPP_

// Agent neighbourhoods from positions: a directed kNN graph, its symmetrized
// form with self-loops (the attention mask), and the normalized Laplacian.

#include <vector>

#include "bgc/autodiff.hpp"
#include "bgc/env.hpp"

namespace bgc::topology {

using ad::BoolMatrix;
using ad::Matrix;

// mask(i, j) == true means j is in the neighbourhood of i. The diagonal is
// always set and the matrix is symmetric.
struct AdjacencyMask {
  BoolMatrix mask;

  int size() const { return static_cast<int>(mask.rows()); }
  bool operator()(int i, int j) const { return mask(i, j); }
};

// directed(i, j) is true iff j is one of the k nearest other agents of i
// (Euclidean; ties broken by lower index). Throws ConfigError when k >= n
// for n > 1 or k < 0.
BoolMatrix knn_graph(const std::vector<env::Vec2>& positions, int k);
inline BoolMatrix knn_graph(const env::AgentPositions& p, int k) {
  return knn_graph(p.xy, k);
}

// directed OR directed^T OR I.
AdjacencyMask symmetrize_with_self_loops(const BoolMatrix& directed);

// symmetrize_with_self_loops(knn_graph(positions, k)).
AdjacencyMask neighbourhood_mask(const env::AgentPositions& positions, int k);

// L = I - D^-1/2 A D^-1/2 over the off-diagonal part A of the mask; rows of
// isolated agents are identity rows.
Matrix normalized_laplacian(const AdjacencyMask& mask);

// Block-diagonal mask for a batch of independent teams.
BoolMatrix block_diagonal(const std::vector<AdjacencyMask>& masks);

// Connected components of the mask, labelled 0.. in order of first agent.
std::vector<int> connected_components(const AdjacencyMask& mask);

}  // namespace bgc::topology

#endif  // BGC_TOPOLOGY_HPP_

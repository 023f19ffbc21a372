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

#include "bgc/replay.hpp"

#include <algorithm>
#include <numeric>

#include "bgc/errors.hpp"

namespace bgc::replay {

EpisodeBatch make_batch(const std::vector<const EpisodeRecord*>& episodes) {
  if (episodes.empty()) throw ContractViolation("make_batch: no episodes");
  EpisodeBatch b;
  b.batch = static_cast<int>(episodes.size());
  b.n_agents = static_cast<int>(episodes.front()->inputs.front().rows());
  for (const EpisodeRecord* e : episodes) b.horizon = std::max(b.horizon, e->length);
  const int n = b.n_agents;
  const auto input_dim = episodes.front()->inputs.front().cols();
  const auto state_dim = episodes.front()->states.front().size();
  const auto n_actions = episodes.front()->available.front().front().size();

  env::ActionMask noop_only(n_actions, 0);
  noop_only[env::kNoOp] = 1;

  b.rewards = Matrix::Zero(b.batch, b.horizon);
  b.terminated = Matrix::Zero(b.batch, b.horizon);
  b.valid = Matrix::Zero(b.batch, b.horizon);
  for (int t = 0; t <= b.horizon; ++t) {
    Matrix inputs = Matrix::Zero(b.batch * n, input_dim);
    Matrix states = Matrix::Zero(b.batch, state_dim);
    std::vector<env::ActionMask> avail;
    std::vector<env::AgentPositions> pos;
    std::vector<int> actions;
    for (int e = 0; e < b.batch; ++e) {
      const EpisodeRecord& ep = *episodes[e];
      if (t <= ep.length) {
        inputs.middleRows(e * n, n) = ep.inputs[t];
        states.row(e) = ep.states[t].transpose();
        for (int i = 0; i < n; ++i) avail.push_back(ep.available[t][i]);
        pos.push_back(ep.positions[t]);
      } else {
        for (int i = 0; i < n; ++i) avail.push_back(noop_only);
        pos.push_back(ep.positions[ep.length]);
      }
      if (t < b.horizon) {
        if (t < ep.length) {
          actions.insert(actions.end(), ep.actions[t].begin(), ep.actions[t].end());
          b.rewards(e, t) = ep.rewards[t];
          b.terminated(e, t) = ep.terminated[t];
          b.valid(e, t) = 1.0;
        } else {
          actions.insert(actions.end(), n, env::kNoOp);
        }
      }
    }
    b.inputs.push_back(std::move(inputs));
    b.states.push_back(std::move(states));
    b.available.push_back(std::move(avail));
    b.positions.push_back(std::move(pos));
    if (t < b.horizon) b.actions.push_back(std::move(actions));
  }
  return b;
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("training.buffer_capacity: must be >= 1");
}

void ReplayBuffer::insert(EpisodeRecord episode) {
  auto ptr = std::make_shared<const EpisodeRecord>(std::move(episode));
  std::lock_guard lock(mu_);
  if (static_cast<int>(episodes_.size()) == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(ptr));
}

int ReplayBuffer::size() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(episodes_.size());
}

std::vector<std::shared_ptr<const EpisodeRecord>> ReplayBuffer::sample(
    int batch_size, std::mt19937_64& rng) const {
  std::lock_guard lock(mu_);
  const int n = static_cast<int>(episodes_.size());
  if (batch_size < 1 || n < batch_size) return {};
  // Partial Fisher-Yates: the first batch_size slots become the sample.
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<std::shared_ptr<const EpisodeRecord>> out;
  out.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) out.push_back(episodes_[idx[i]]);
  return out;
}

std::shared_ptr<const EpisodeRecord> ReplayBuffer::at(int i) const {
  std::lock_guard lock(mu_);
  if (i < 0 || i >= static_cast<int>(episodes_.size())) {
    throw ContractViolation("ReplayBuffer::at: index out of range");
  }
  return episodes_[i];
}

}  // namespace bgc::replay

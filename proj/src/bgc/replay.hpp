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

#ifndef BGC_REPLAY_HPP_
#define BGC_REPLAY_HPP_

// Whole-episode replay for recurrent Q-learning.

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

#include "bgc/autodiff.hpp"
#include "bgc/env.hpp"

namespace bgc::replay {

using ad::Matrix;

// One episode of `length` transitions. Per-timestep arrays indexed by
// t = 0..length hold length + 1 entries (the final one is the state reached
// by the last transition); per-transition arrays hold `length` entries.
struct EpisodeRecord {
  int length = 0;
  std::vector<Matrix> inputs;                          // n x input_dim
  std::vector<Eigen::VectorXd> states;                 // state_dim
  std::vector<std::vector<env::ActionMask>> available; // n masks
  std::vector<env::AgentPositions> positions;
  std::vector<std::vector<int>> actions;               // n actions
  std::vector<double> rewards;
  std::vector<std::uint8_t> terminated;
  double episode_return = 0.0;
  bool won = false;
  std::uint64_t seed = 0;
};

// Episodes padded to a common horizon. Row b * n + i of every per-step matrix
// is agent i of episode b. Padding steps carry zero inputs, zero rewards,
// only-no-op availability and the last real positions.
struct EpisodeBatch {
  int batch = 0;
  int n_agents = 0;
  int horizon = 0;  // max transitions over the batch
  std::vector<Matrix> inputs;               // horizon + 1 entries, (B n) x input_dim
  std::vector<Matrix> states;               // horizon + 1 entries, B x state_dim
  std::vector<std::vector<env::ActionMask>> available;  // horizon + 1 entries, B n masks
  std::vector<std::vector<env::AgentPositions>> positions;  // horizon + 1 entries, B
  std::vector<std::vector<int>> actions;    // horizon entries, B n actions
  Matrix rewards;     // B x horizon
  Matrix terminated;  // B x horizon
  Matrix valid;       // B x horizon, 1 for real transitions
};

EpisodeBatch make_batch(const std::vector<const EpisodeRecord*>& episodes);

// FIFO ring of episodes. All methods are serialized by an internal mutex so
// rollout workers may insert concurrently.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void insert(EpisodeRecord episode);
  int size() const;
  int capacity() const { return capacity_; }
  bool can_sample(int batch_size) const { return size() >= batch_size; }

  // Uniform sample without replacement. Returns an empty vector when fewer
  // than batch_size episodes are stored.
  std::vector<std::shared_ptr<const EpisodeRecord>> sample(int batch_size,
                                                           std::mt19937_64& rng) const;
  // Episode at position i, oldest first.
  std::shared_ptr<const EpisodeRecord> at(int i) const;

 private:
  int capacity_;
  mutable std::mutex mu_;
  std::deque<std::shared_ptr<const EpisodeRecord>> episodes_;
};

}  // namespace bgc::replay

#endif  // BGC_REPLAY_HPP_

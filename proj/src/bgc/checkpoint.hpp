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

#ifndef BGC_CHECKPOINT_HPP_
#define BGC_CHECKPOINT_HPP_

// Versioned binary checkpoints. Layout (native little-endian):
//   "BGCCKPT\0"  u32 version
//   u32 n_meta, then n_meta x (u32 len, name, i64 value)   -- shape metadata
//   u32 n_tensors, then n_tensors x (u32 len, name, u32 rows, u32 cols,
//                                    rows*cols f64 in row-major order)
// Values round-trip bit-exactly.

#include <cstdint>
#include <optional>
#include <string>

#include "bgc/belief_agent.hpp"
#include "bgc/mixers.hpp"

namespace bgc::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

struct Checkpoint {
  agent::AgentParams agent;
  mixers::MixerParams mixer;
  std::optional<agent::StudentParams> student;
  std::int64_t env_steps = 0;
};

void save(const std::string& path, const agent::ModelConfig& model,
          const mixers::MixerConfig& mixer, const agent::AgentParams& agent_params,
          const mixers::MixerParams& mixer_params, const agent::StudentParams* student,
          std::int64_t env_steps);

// Throws LoadError when the file is missing or corrupt, or when its recorded
// shapes differ from the given configuration (the message names the field).
Checkpoint load(const std::string& path, const agent::ModelConfig& model,
                const mixers::MixerConfig& mixer);

}  // namespace bgc::checkpoint

#endif  // BGC_CHECKPOINT_HPP_

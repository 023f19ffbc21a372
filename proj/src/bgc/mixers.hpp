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

#ifndef BGC_MIXERS_HPP_
#define BGC_MIXERS_HPP_

// Joint action-value mixers. Inputs are batched: agent_qs is (B x n) with the
// chosen per-agent Q-values, states is (B x state_dim); the result is (B x 1).

#include <cstdint>
#include <vector>

#include "bgc/autodiff.hpp"
#include "bgc/belief_agent.hpp"

namespace bgc::mixers {

using ad::Parameter;
using ad::Tape;
using ad::Var;
using agent::Linear;

enum class MixerKind { kQmix, kVdn };

struct MixerConfig {
  MixerKind kind = MixerKind::kQmix;
  int n_agents = 0;
  int state_dim = 0;
  int hypernet_dim = 64;
};

// State-conditioned hypernetworks producing a two-layer monotonic mixer.
struct MixerParams {
  MixerKind kind = MixerKind::kQmix;
  Linear hyper_w1;   // state -> n * h (absolute value taken)
  Linear hyper_b1;   // state -> h
  Linear hyper_w2;   // state -> h (absolute value taken)
  Linear hyper_b2a;  // state -> h, ReLU
  Linear hyper_b2b;  // h -> 1

  static MixerParams init(const MixerConfig& cfg, std::uint64_t seed);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

Var vdn_mix(Tape& t, Var agent_qs);

// q_tot = w2(s)^T ELU(|W1(s)| q + b1(s)) + b2(s) with w2 = |hyper_w2(s)|.
Var qmix_mix(Tape& t, Var agent_qs, Var states, const MixerParams& p);

// Dispatch on p.kind (VDN ignores states and parameters).
Var mix(Tape& t, Var agent_qs, Var states, const MixerParams& p);

}  // namespace bgc::mixers

#endif  // BGC_MIXERS_HPP_

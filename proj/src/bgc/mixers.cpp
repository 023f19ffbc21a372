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

#include "bgc/mixers.hpp"

#include <random>
#include <utility>

#include "bgc/errors.hpp"

namespace bgc::mixers {

MixerParams MixerParams::init(const MixerConfig& cfg, std::uint64_t seed) {
  if (cfg.n_agents < 1) throw ConfigError("mixer: n_agents must be >= 1");
  if (cfg.state_dim < 1) throw ConfigError("mixer: state_dim must be >= 1");
  if (cfg.hypernet_dim < 1) throw ConfigError("model.hypernet_dim: must be >= 1");
  MixerParams p;
  p.kind = cfg.kind;
  if (cfg.kind == MixerKind::kVdn) return p;
  std::mt19937_64 rng(seed);
  const int h = cfg.hypernet_dim;
  p.hyper_w1 = Linear("mixer.hyper_w1", cfg.state_dim, cfg.n_agents * h, rng);
  p.hyper_b1 = Linear("mixer.hyper_b1", cfg.state_dim, h, rng);
  p.hyper_w2 = Linear("mixer.hyper_w2", cfg.state_dim, h, rng);
  p.hyper_b2a = Linear("mixer.hyper_b2a", cfg.state_dim, h, rng);
  p.hyper_b2b = Linear("mixer.hyper_b2b", h, 1, rng);
  return p;
}

std::vector<const Parameter*> MixerParams::parameters() const {
  if (kind == MixerKind::kVdn) return {};
  std::vector<const Parameter*> out;
  for (const Linear* l : {&hyper_w1, &hyper_b1, &hyper_w2, &hyper_b2a, &hyper_b2b}) {
    out.push_back(&l->weight);
    out.push_back(&l->bias);
  }
  return out;
}

std::vector<Parameter*> MixerParams::parameters() {
  std::vector<Parameter*> out;
  for (const Parameter* p : std::as_const(*this).parameters()) {
    out.push_back(const_cast<Parameter*>(p));
  }
  return out;
}

Var vdn_mix(Tape&, Var agent_qs) { return ad::row_sum(agent_qs); }

Var qmix_mix(Tape& t, Var agent_qs, Var states, const MixerParams& p) {
  if (p.kind != MixerKind::kQmix) throw ContractViolation("qmix_mix: parameters are not QMIX");
  if (agent_qs.rows() != states.rows()) {
    throw ContractViolation("qmix_mix: batch size differs between Q-values and states");
  }
  const Eigen::Index h = p.hyper_b1.out_dim();
  Var w1 = ad::abs(p.hyper_w1(t, states));
  Var b1 = p.hyper_b1(t, states);
  Var hidden = ad::elu(ad::add(ad::batched_vecmat(agent_qs, w1, h), b1));
  Var w2 = ad::abs(p.hyper_w2(t, states));
  Var b2 = p.hyper_b2b(t, ad::relu(p.hyper_b2a(t, states)));
  return ad::add(ad::row_sum(ad::mul(hidden, w2)), b2);
}

Var mix(Tape& t, Var agent_qs, Var states, const MixerParams& p) {
  return p.kind == MixerKind::kVdn ? vdn_mix(t, agent_qs) : qmix_mix(t, agent_qs, states, p);
}

}  // namespace bgc::mixers

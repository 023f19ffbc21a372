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

#include "bgc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <utility>
#include <vector>

#include "bgc/errors.hpp"

namespace bgc::checkpoint {
namespace {

constexpr char kMagic[8] = {'B', 'G', 'C', 'C', 'K', 'P', 'T', '\0'};

using Meta = std::vector<std::pair<std::string, std::int64_t>>;

Meta metadata(const agent::ModelConfig& m, const mixers::MixerConfig& x, bool has_student,
              std::int64_t env_steps) {
  return {
      {"agent_kind", m.kind == agent::AgentKind::kBelief ? 0 : 1},
      {"mixer_kind", x.kind == mixers::MixerKind::kQmix ? 0 : 1},
      {"input_dim", m.input_dim},
      {"n_actions", m.n_actions},
      {"hidden_dim", m.hidden_dim},
      {"embed_dim", m.embed_dim},
      {"group_dim", m.group_dim},
      {"individual_dim", m.individual_dim},
      {"gat_layers", m.kind == agent::AgentKind::kBelief ? m.gat_layers : 0},
      {"n_agents", x.n_agents},
      {"state_dim", x.state_dim},
      {"hypernet_dim", x.kind == mixers::MixerKind::kQmix ? x.hypernet_dim : 0},
      {"has_student", has_student ? 1 : 0},
      {"env_steps", env_steps},
  };
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write checkpoint '" + path + "'");
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  template <typename T>
  void pod(T v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw IoError("failed writing checkpoint '" + path + "'");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw LoadError("cannot open checkpoint '" + path + "'");
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (!in_) throw LoadError("checkpoint '" + path_ + "' is truncated");
  }
  template <typename T>
  T pod() {
    T v{};
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > (1u << 16)) throw LoadError("checkpoint '" + path_ + "' is corrupt");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

std::vector<const ad::Parameter*> all_params(const agent::AgentParams& a,
                                             const mixers::MixerParams& m,
                                             const agent::StudentParams* s) {
  std::vector<const ad::Parameter*> out = a.parameters();
  for (const ad::Parameter* p : m.parameters()) out.push_back(p);
  if (s != nullptr)
    for (const ad::Parameter* p : s->parameters()) out.push_back(p);
  return out;
}

}  // namespace

void save(const std::string& path, const agent::ModelConfig& model,
          const mixers::MixerConfig& mixer, const agent::AgentParams& agent_params,
          const mixers::MixerParams& mixer_params, const agent::StudentParams* student,
          std::int64_t env_steps) {
  Writer w(path);
  w.raw(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kFormatVersion);
  const Meta meta = metadata(model, mixer, student != nullptr, env_steps);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [name, value] : meta) {
    w.str(name);
    w.pod<std::int64_t>(value);
  }
  const auto params = all_params(agent_params, mixer_params, student);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const ad::Parameter* p : params) {
    w.str(p->name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p->value.rows()));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) w.pod<double>(p->value(r, c));
  }
  w.finish(path);
}

Checkpoint load(const std::string& path, const agent::ModelConfig& model,
                const mixers::MixerConfig& mixer) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw LoadError("'" + path + "' is not a checkpoint file");
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kFormatVersion) {
    throw LoadError("checkpoint '" + path + "' has format version " + std::to_string(version) +
                    ", expected " + std::to_string(kFormatVersion));
  }
  std::map<std::string, std::int64_t> stored;
  const auto n_meta = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string name = r.str();
    stored[name] = r.pod<std::int64_t>();
  }
  const bool has_student = stored.count("has_student") && stored["has_student"] == 1;
  for (const auto& [name, expected] : metadata(model, mixer, has_student, 0)) {
    if (name == "env_steps" || name == "has_student") continue;
    auto it = stored.find(name);
    if (it == stored.end()) throw LoadError("checkpoint '" + path + "' lacks field " + name);
    if (it->second != expected) {
      throw LoadError("checkpoint '" + path + "' shape mismatch: " + name + " is " +
                      std::to_string(it->second) + " in the checkpoint but " +
                      std::to_string(expected) + " in the configuration");
    }
  }

  Checkpoint ck;
  ck.agent = agent::AgentParams::init(model, 0);
  ck.mixer = mixers::MixerParams::init(mixer, 0);
  if (has_student) ck.student = agent::StudentParams::init(model, 0);
  ck.env_steps = stored.count("env_steps") ? stored["env_steps"] : 0;

  std::map<std::string, ad::Parameter*> by_name;
  for (const ad::Parameter* p :
       all_params(ck.agent, ck.mixer, ck.student ? &*ck.student : nullptr)) {
    by_name[p->name] = const_cast<ad::Parameter*>(p);
  }
  const auto n_tensors = r.pod<std::uint32_t>();
  if (n_tensors != by_name.size()) {
    throw LoadError("checkpoint '" + path + "' holds " + std::to_string(n_tensors) +
                    " tensors, expected " + std::to_string(by_name.size()));
  }
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str();
    const auto rows = r.pod<std::uint32_t>();
    const auto cols = r.pod<std::uint32_t>();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("checkpoint '" + path + "': unexpected tensor " + name);
    ad::Matrix& dst = it->second->value;
    if (rows != dst.rows() || cols != dst.cols()) {
      throw LoadError("checkpoint '" + path + "': tensor " + name + " is " +
                      std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                      std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
    }
    for (Eigen::Index rr = 0; rr < dst.rows(); ++rr)
      for (Eigen::Index cc = 0; cc < dst.cols(); ++cc) dst(rr, cc) = r.pod<double>();
    by_name.erase(it);
  }
  return ck;
}

}  // namespace bgc::checkpoint

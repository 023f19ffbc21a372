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

#include "bgc/bgc.h"

#include <cstring>
#include <exception>
#include <string>

#include "bgc/checkpoint.hpp"
#include "bgc/config.hpp"
#include "bgc/env.hpp"
#include "bgc/errors.hpp"
#include "bgc/harness.hpp"

struct bgc_config {
  bgc::config::ExperimentConfig cfg;
};

struct bgc_env {
  explicit bgc_env(const bgc::env::EnvConfig& c) : env(c) {}
  bgc::env::SkirmishEnv env;
};

namespace {

thread_local std::string g_last_error;

bgc_status fail(bgc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
bgc_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return BGC_OK;
  } catch (const bgc::ConfigError& e) {
    return fail(BGC_ERR_CONFIG, e.what());
  } catch (const bgc::LoadError& e) {
    return fail(BGC_ERR_LOAD, e.what());
  } catch (const bgc::IoError& e) {
    return fail(BGC_ERR_IO, e.what());
  } catch (const bgc::NumericError& e) {
    return fail(BGC_ERR_NUMERIC, e.what());
  } catch (const bgc::ContractViolation& e) {
    return fail(BGC_ERR_CONTRACT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(BGC_ERR_CONTRACT, e.what());
  } catch (const std::exception& e) {
    return fail(BGC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BGC_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw bgc::ContractViolation(std::string(what) + " must not be NULL");
}

bgc_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buf == nullptr || cap < s.size() + 1) {
    return fail(BGC_ERR_BUFFER, "buffer too small: need " + std::to_string(s.size() + 1));
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return BGC_OK;
}

}  // namespace

extern "C" {

const char* bgc_last_error(void) { return g_last_error.c_str(); }

const char* bgc_status_name(bgc_status status) {
  switch (status) {
    case BGC_OK: return "ok";
    case BGC_ERR_CONFIG: return "config error";
    case BGC_ERR_CONTRACT: return "contract violation";
    case BGC_ERR_LOAD: return "load error";
    case BGC_ERR_IO: return "io error";
    case BGC_ERR_NUMERIC: return "numeric error";
    case BGC_ERR_BUFFER: return "buffer too small";
    case BGC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bgc_version(void) { return "1.0.0"; }

bgc_status bgc_config_default(bgc_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bgc_config{};
  });
}

bgc_status bgc_config_load(const char* path, bgc_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new bgc_config{bgc::config::load_file(path)};
  });
}

bgc_status bgc_config_parse(const char* ini_text, bgc_config** out) {
  return guarded([&] {
    require(ini_text, "ini_text");
    require(out, "out");
    *out = new bgc_config{bgc::config::parse_ini(ini_text)};
  });
}

void bgc_config_free(bgc_config* cfg) { delete cfg; }

bgc_status bgc_config_set(bgc_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    bgc::config::apply_override(cfg->cfg, key, value);
  });
}

bgc_status bgc_config_get(const bgc_config* cfg, const char* key, char* buf, size_t cap,
                          size_t* needed) {
  std::string v;
  const bgc_status s = guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    v = bgc::config::get_value(cfg->cfg, key);
  });
  return s != BGC_OK ? s : copy_out(v, buf, cap, needed);
}

bgc_status bgc_config_validate(const bgc_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.validate();
  });
}

bgc_status bgc_config_to_ini(const bgc_config* cfg, char* buf, size_t cap, size_t* needed) {
  std::string v;
  const bgc_status s = guarded([&] {
    require(cfg, "cfg");
    v = bgc::config::to_ini(cfg->cfg);
  });
  return s != BGC_OK ? s : copy_out(v, buf, cap, needed);
}

bgc_status bgc_env_create(const bgc_config* cfg, bgc_env** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    cfg->cfg.env.validate();
    *out = new bgc_env(cfg->cfg.env);
  });
}

void bgc_env_free(bgc_env* env) { delete env; }

bgc_status bgc_env_get_dims(const bgc_env* env, bgc_env_dims* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    const auto& c = env->env.config();
    *out = {c.n_allies, c.n_enemies, c.n_actions(), c.obs_dim(), c.state_dim(), c.max_steps};
  });
}

bgc_status bgc_env_reset(bgc_env* env, uint64_t seed) {
  return guarded([&] {
    require(env, "env");
    env->env.reset(seed);
  });
}

bgc_status bgc_env_step(bgc_env* env, const int* actions, double* reward, int* terminated,
                        int* won) {
  return guarded([&] {
    require(env, "env");
    require(actions, "actions");
    std::vector<int> a(actions, actions + env->env.config().n_allies);
    const auto r = env->env.step(a);
    if (reward != nullptr) *reward = r.reward;
    if (terminated != nullptr) *terminated = r.terminated ? 1 : 0;
    if (won != nullptr) *won = r.won ? 1 : 0;
  });
}

bgc_status bgc_env_observation(const bgc_env* env, int agent, double* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    const auto o = env->env.observe(agent);
    std::copy(o.begin(), o.end(), out);
  });
}

bgc_status bgc_env_state(const bgc_env* env, double* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    const auto s = env->env.global_state();
    std::copy(s.begin(), s.end(), out);
  });
}

bgc_status bgc_env_available(const bgc_env* env, int agent, unsigned char* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    const auto m = env->env.available_actions(agent);
    std::copy(m.begin(), m.end(), out);
  });
}

bgc_status bgc_train(const bgc_config* cfg, bgc_record_fn on_record, void* user,
                     bgc_train_result* out) {
  return guarded([&] {
    require(cfg, "cfg");
    bgc::harness::TrainHooks hooks;
    if (on_record != nullptr) {
      hooks.on_record = [&](const std::string& line) { on_record(line.c_str(), user); };
    }
    const auto s = bgc::harness::train(cfg->cfg, hooks);
    if (out != nullptr) {
      *out = {s.env_steps, s.episodes, s.train_steps, s.final_eval.win_rate,
              s.final_eval.mean_return};
    }
  });
}

bgc_status bgc_evaluate(const bgc_config* cfg, const char* checkpoint, int n_episodes,
                        uint64_t seed, int use_student, bgc_eval_result* out, int* won,
                        double* returns) {
  return guarded([&] {
    require(cfg, "cfg");
    if (n_episodes < 1) throw bgc::ContractViolation("n_episodes must be >= 1");
    cfg->cfg.validate();
    const auto model = cfg->cfg.model_config();
    bgc::harness::Policy policy;
    std::optional<bgc::checkpoint::Checkpoint> ck;
    if (checkpoint == nullptr) {
      policy.kind = bgc::harness::PolicyKind::kRandom;
    } else {
      ck = bgc::checkpoint::load(checkpoint, model, cfg->cfg.mixer_config());
      policy.model = &model;
      policy.agent = &ck->agent;
      if (use_student) {
        if (!ck->student) {
          throw bgc::LoadError(std::string("checkpoint '") + checkpoint +
                               "' holds no student network");
        }
        policy.source = bgc::agent::GroupSource::kStudent;
        policy.student = &*ck->student;
      }
    }
    const auto r = bgc::harness::evaluate(cfg->cfg.env, policy, n_episodes, seed);
    if (out != nullptr) *out = {r.episodes, r.win_rate, r.mean_return, r.return_stddev};
    for (int i = 0; i < n_episodes; ++i) {
      if (won != nullptr) won[i] = r.won[i];
      if (returns != nullptr) returns[i] = r.returns[i];
    }
  });
}

bgc_status bgc_distill(const bgc_config* cfg, const char* teacher_checkpoint, int64_t steps,
                       const char* out_dir, int eval_episodes, bgc_distill_result* out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(teacher_checkpoint, "teacher_checkpoint");
    require(out_dir, "out_dir");
    if (eval_episodes < 1) throw bgc::ContractViolation("eval_episodes must be >= 1");
    const auto r =
        bgc::harness::distill(cfg->cfg, teacher_checkpoint, steps, out_dir, eval_episodes);
    if (out != nullptr) {
      *out = {r.env_steps,        r.updates,          r.agreement_states,
              r.agreement,        r.teacher_win_rate, r.student_win_rate,
              r.win_rate_delta,   r.first_loss,       r.final_loss};
    }
  });
}

bgc_status bgc_export_embeddings(const bgc_config* cfg, const char* checkpoint, int n_episodes,
                                 const char* out_path, uint64_t seed, int use_student,
                                 const char* run_id, int64_t* rows) {
  return guarded([&] {
    require(cfg, "cfg");
    require(checkpoint, "checkpoint");
    require(out_path, "out_path");
    cfg->cfg.validate();
    const auto n = bgc::harness::export_embeddings(cfg->cfg, checkpoint, n_episodes, out_path,
                                                   seed, use_student != 0,
                                                   run_id != nullptr ? run_id : "run");
    if (rows != nullptr) *rows = n;
  });
}

}  // extern "C"

/*
 * Copyright 2026 The BGC Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the BGC library.
 *
 * Every function returns a bgc_status. On failure, bgc_last_error() returns
 * a message for the calling thread, valid until that thread's next call.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function. Strings are copied out with a (buf, cap, needed) triple:
 * needed receives the length including the terminator, and BGC_ERR_BUFFER is
 * returned if cap is too small. */

#ifndef BGC_BGC_H_
#define BGC_BGC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(BGC_BUILDING_LIBRARY)
#define BGC_API __attribute__((visibility("default")))
#else
#define BGC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bgc_status {
  BGC_OK = 0,
  BGC_ERR_CONFIG = 1,      /* invalid or unknown configuration field */
  BGC_ERR_CONTRACT = 2,    /* precondition violated (bad argument, bad action) */
  BGC_ERR_LOAD = 3,        /* checkpoint missing, corrupt or shape-mismatched */
  BGC_ERR_IO = 4,          /* file could not be written */
  BGC_ERR_NUMERIC = 5,     /* non-finite values */
  BGC_ERR_BUFFER = 6,      /* output buffer too small */
  BGC_ERR_INTERNAL = 7
} bgc_status;

BGC_API const char* bgc_last_error(void);
BGC_API const char* bgc_status_name(bgc_status status);
BGC_API const char* bgc_version(void);

/* ---- configuration ---- */

typedef struct bgc_config bgc_config;

BGC_API bgc_status bgc_config_default(bgc_config** out);
BGC_API bgc_status bgc_config_load(const char* path, bgc_config** out);
BGC_API bgc_status bgc_config_parse(const char* ini_text, bgc_config** out);
BGC_API void bgc_config_free(bgc_config* cfg);
/* key is "section.key"; io.run_dir sets the run directory. */
BGC_API bgc_status bgc_config_set(bgc_config* cfg, const char* key, const char* value);
BGC_API bgc_status bgc_config_get(const bgc_config* cfg, const char* key, char* buf, size_t cap,
                                  size_t* needed);
BGC_API bgc_status bgc_config_validate(const bgc_config* cfg);
BGC_API bgc_status bgc_config_to_ini(const bgc_config* cfg, char* buf, size_t cap,
                                     size_t* needed);

/* ---- environment ---- */

typedef struct bgc_env bgc_env;

typedef struct bgc_env_dims {
  int n_agents;
  int n_enemies;
  int n_actions;
  int obs_dim;
  int state_dim;
  int max_steps;
} bgc_env_dims;

BGC_API bgc_status bgc_env_create(const bgc_config* cfg, bgc_env** out);
BGC_API void bgc_env_free(bgc_env* env);
BGC_API bgc_status bgc_env_get_dims(const bgc_env* env, bgc_env_dims* out);
BGC_API bgc_status bgc_env_reset(bgc_env* env, uint64_t seed);
/* actions holds n_agents entries. */
BGC_API bgc_status bgc_env_step(bgc_env* env, const int* actions, double* reward,
                                int* terminated, int* won);
/* out holds obs_dim doubles. */
BGC_API bgc_status bgc_env_observation(const bgc_env* env, int agent, double* out);
/* out holds state_dim doubles. */
BGC_API bgc_status bgc_env_state(const bgc_env* env, double* out);
/* out holds n_actions bytes (1 = available). */
BGC_API bgc_status bgc_env_available(const bgc_env* env, int agent, unsigned char* out);

/* ---- training and evaluation ---- */

/* Receives each metrics record (one JSON object) as it is written. */
typedef void (*bgc_record_fn)(const char* json_line, void* user);

typedef struct bgc_train_result {
  int64_t env_steps;
  int64_t episodes;
  int64_t train_steps;
  double final_win_rate;
  double final_return;
} bgc_train_result;

/* Trains into the configured run directory. */
BGC_API bgc_status bgc_train(const bgc_config* cfg, bgc_record_fn on_record, void* user,
                             bgc_train_result* out);

typedef struct bgc_eval_result {
  int episodes;
  double win_rate;
  double mean_return;
  double return_stddev;
} bgc_eval_result;

/* Greedy, noise-free evaluation. checkpoint NULL evaluates the uniformly
 * random policy. won and returns may be NULL or hold n_episodes entries. */
BGC_API bgc_status bgc_evaluate(const bgc_config* cfg, const char* checkpoint, int n_episodes,
                                uint64_t seed, int use_student, bgc_eval_result* out,
                                int* won, double* returns);

typedef struct bgc_distill_result {
  int64_t env_steps;
  int64_t updates;
  int agreement_states;
  double agreement;
  double teacher_win_rate;
  double student_win_rate;
  double win_rate_delta;
  double first_loss;
  double final_loss;
} bgc_distill_result;

BGC_API bgc_status bgc_distill(const bgc_config* cfg, const char* teacher_checkpoint,
                               int64_t steps, const char* out_dir, int eval_episodes,
                               bgc_distill_result* out);

BGC_API bgc_status bgc_export_embeddings(const bgc_config* cfg, const char* checkpoint,
                                         int n_episodes, const char* out_path, uint64_t seed,
                                         int use_student, const char* run_id, int64_t* rows);

#ifdef __cplusplus
}
#endif

#endif /* BGC_BGC_H_ */

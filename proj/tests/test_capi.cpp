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


#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"

#include "bgc/bgc.h"

namespace fs = std::filesystem;

namespace {

struct Config {
  bgc_config* ptr = nullptr;
  ~Config() { bgc_config_free(ptr); }
};

struct Env {
  bgc_env* ptr = nullptr;
  ~Env() { bgc_env_free(ptr); }
};

std::string get(const bgc_config* c, const char* key) {
  size_t needed = 0;
  REQUIRE(bgc_config_get(c, key, nullptr, 0, &needed) == BGC_ERR_BUFFER);
  std::string s(needed, '\0');
  REQUIRE(bgc_config_get(c, key, s.data(), s.size(), &needed) == BGC_OK);
  s.resize(needed - 1);
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bgc_test_capi" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void smoke(Config& c, const fs::path& dir) {
  const std::string path = std::string(BGC_CONFIG_DIR) + "/smoke_2v2.ini";
  REQUIRE(bgc_config_load(path.c_str(), &c.ptr) == BGC_OK);
  REQUIRE(bgc_config_set(c.ptr, "io.run_dir", dir.string().c_str()) == BGC_OK);
  REQUIRE(bgc_config_set(c.ptr, "training.total_env_steps", "200") == BGC_OK);
  REQUIRE(bgc_config_set(c.ptr, "training.eval_episodes", "3") == BGC_OK);
}

void count_records(const char*, void* user) { ++*static_cast<int*>(user); }

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strcmp(bgc_status_name(BGC_OK), "ok") == 0);
  CHECK(std::strlen(bgc_status_name(BGC_ERR_LOAD)) > 0);
  CHECK(std::strlen(bgc_version()) > 0);
}

TEST_CASE("config get/set/validate through the C API") {
  Config c;
  REQUIRE(bgc_config_default(&c.ptr) == BGC_OK);
  CHECK(get(c.ptr, "model.group_dim") == "32");
  CHECK(bgc_config_set(c.ptr, "model.mixer", "vdn") == BGC_OK);
  CHECK(get(c.ptr, "model.mixer") == "vdn");
  CHECK(bgc_config_set(c.ptr, "model.nonsense", "1") == BGC_ERR_CONFIG);
  CHECK(std::string(bgc_last_error()).find("model.nonsense") != std::string::npos);
  CHECK(bgc_config_set(c.ptr, "model.knn_k", "9") == BGC_OK);
  CHECK(bgc_config_validate(c.ptr) == BGC_ERR_CONFIG);
  CHECK(std::string(bgc_last_error()).find("model.knn_k") != std::string::npos);
  CHECK(bgc_config_default(nullptr) == BGC_ERR_CONTRACT);

  size_t needed = 0;
  CHECK(bgc_config_to_ini(c.ptr, nullptr, 0, &needed) == BGC_ERR_BUFFER);
  std::string ini(needed, '\0');
  CHECK(bgc_config_to_ini(c.ptr, ini.data(), ini.size(), &needed) == BGC_OK);
  Config back;
  CHECK(bgc_config_parse(ini.c_str(), &back.ptr) == BGC_OK);
  CHECK(get(back.ptr, "model.mixer") == "vdn");

  Config bad;
  CHECK(bgc_config_parse("[env]\nn_allies = 2\n", &bad.ptr) == BGC_ERR_CONFIG);
  CHECK(bad.ptr == nullptr);
  CHECK(bgc_config_load("/nonexistent/config.ini", &bad.ptr) != BGC_OK);
}

TEST_CASE("environment stepping through the C API") {
  Config c;
  REQUIRE(bgc_config_default(&c.ptr) == BGC_OK);
  Env e;
  REQUIRE(bgc_env_create(c.ptr, &e.ptr) == BGC_OK);
  bgc_env_dims d{};
  REQUIRE(bgc_env_get_dims(e.ptr, &d) == BGC_OK);
  CHECK(d.n_agents == 4);
  CHECK(d.n_actions == 5 + d.n_enemies);
  REQUIRE(bgc_env_reset(e.ptr, 3) == BGC_OK);

  std::vector<double> obs(d.obs_dim), state(d.state_dim);
  std::vector<unsigned char> avail(d.n_actions);
  CHECK(bgc_env_observation(e.ptr, 0, obs.data()) == BGC_OK);
  CHECK(bgc_env_state(e.ptr, state.data()) == BGC_OK);
  CHECK(bgc_env_observation(e.ptr, 99, obs.data()) == BGC_ERR_CONTRACT);

  double total = 0.0;
  int terminated = 0, won = 0, steps = 0;
  while (!terminated) {
    std::vector<int> actions(d.n_agents);
    for (int i = 0; i < d.n_agents; ++i) {
      REQUIRE(bgc_env_available(e.ptr, i, avail.data()) == BGC_OK);
      actions[i] = avail[1 + (steps + i) % 4] ? 1 + (steps + i) % 4 : 0;
    }
    double r = 0.0;
    REQUIRE(bgc_env_step(e.ptr, actions.data(), &r, &terminated, &won) == BGC_OK);
    total += r;
    ++steps;
  }
  CHECK(steps <= d.max_steps);
  CHECK(total >= 0.0);
  CHECK(total <= 1.0);
  std::vector<int> after(d.n_agents, 0);
  double r = 0.0;
  CHECK(bgc_env_step(e.ptr, after.data(), &r, &terminated, &won) == BGC_ERR_CONTRACT);

  REQUIRE(bgc_env_reset(e.ptr, 3) == BGC_OK);
  std::vector<int> illegal(d.n_agents, 5 + d.n_enemies);
  CHECK(bgc_env_step(e.ptr, illegal.data(), &r, &terminated, &won) == BGC_ERR_CONTRACT);
  CHECK(std::strlen(bgc_last_error()) > 0);
}

TEST_CASE("train, evaluate, distill and export through the C API") {
  const fs::path dir = scratch("run");
  Config c;
  smoke(c, dir);
  int records = 0;
  bgc_train_result tr{};
  REQUIRE(bgc_train(c.ptr, count_records, &records, &tr) == BGC_OK);
  CHECK(tr.env_steps >= 200);
  CHECK(records >= 1);
  const std::string ckpt = (dir / "final.ckpt").string();
  CHECK(fs::exists(ckpt));

  bgc_eval_result a{}, b{};
  std::vector<int> won(6);
  std::vector<double> returns(6);
  REQUIRE(bgc_evaluate(c.ptr, ckpt.c_str(), 6, 9, 0, &a, won.data(), returns.data()) == BGC_OK);
  REQUIRE(bgc_evaluate(c.ptr, ckpt.c_str(), 6, 9, 0, &b, nullptr, nullptr) == BGC_OK);
  CHECK(a.win_rate == b.win_rate);
  CHECK(a.mean_return == b.mean_return);
  CHECK(a.win_rate == doctest::Approx(std::accumulate(won.begin(), won.end(), 0) / 6.0));
  CHECK(bgc_evaluate(c.ptr, ckpt.c_str(), 0, 9, 0, &a, nullptr, nullptr) == BGC_ERR_CONTRACT);
  CHECK(bgc_evaluate(c.ptr, nullptr, 4, 9, 0, &a, nullptr, nullptr) == BGC_OK);
  CHECK(bgc_evaluate(c.ptr, (dir / "missing.ckpt").string().c_str(), 4, 9, 0, &a, nullptr, nullptr) ==
        BGC_ERR_LOAD);

  bgc_distill_result dr{};
  const fs::path out = dir / "distill";
  REQUIRE(bgc_distill(c.ptr, ckpt.c_str(), 150, out.string().c_str(), 4, &dr) == BGC_OK);
  CHECK(dr.agreement >= 0.0);
  CHECK(dr.agreement <= 1.0);
  CHECK(fs::exists(out / "student.ckpt"));
  CHECK(fs::exists(out / "distill_report.json"));
  CHECK(bgc_evaluate(c.ptr, (out / "student.ckpt").string().c_str(), 3, 1, 1, &a, nullptr, nullptr) ==
        BGC_OK);
  CHECK(bgc_evaluate(c.ptr, ckpt.c_str(), 3, 1, 1, &a, nullptr, nullptr) == BGC_ERR_LOAD);

  int64_t rows = 0;
  const std::string tsv = (dir / "emb.tsv").string();
  REQUIRE(bgc_export_embeddings(c.ptr, ckpt.c_str(), 2, tsv.c_str(), 0, 0, "x", &rows) == BGC_OK);
  CHECK(rows > 0);
  CHECK(bgc_export_embeddings(c.ptr, ckpt.c_str(), 2, "/nonexistent-dir/e.tsv", 0, 0, "x", &rows) ==
        BGC_ERR_IO);

  // Shape mismatch is a load error naming the field.
  REQUIRE(bgc_config_set(c.ptr, "model.group_dim", "16") == BGC_OK);
  CHECK(bgc_evaluate(c.ptr, ckpt.c_str(), 2, 0, 0, &a, nullptr, nullptr) == BGC_ERR_LOAD);
  CHECK(std::string(bgc_last_error()).find("group_dim") != std::string::npos);
}

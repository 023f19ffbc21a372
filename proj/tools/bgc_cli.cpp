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

// bgc: train, evaluate, distill and export embeddings.
//
// Exit status: 0 success, 1 invalid configuration or usage, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bgc/bgc.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CliError {
  int code;
  std::string message;
};

int exit_code(bgc_status s) {
  return (s == BGC_ERR_CONFIG || s == BGC_ERR_CONTRACT) ? kExitValidation : kExitRuntime;
}

void check(bgc_status s, const std::string& context) {
  if (s != BGC_OK) throw CliError{exit_code(s), context + ": " + bgc_last_error()};
}

using ConfigPtr = std::unique_ptr<bgc_config, decltype(&bgc_config_free)>;

std::string get(const bgc_config* cfg, const std::string& key) {
  size_t needed = 0;
  bgc_config_get(cfg, key.c_str(), nullptr, 0, &needed);
  std::string out(needed, '\0');
  check(bgc_config_get(cfg, key.c_str(), out.data(), out.size(), &needed), "config");
  out.resize(needed - 1);
  return out;
}

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string mixer;
  std::string run_dir;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config, "Experiment config (INI)")->required();
  cmd->add_option("--set", a.overrides, "Override a field: section.key=value")
      ->take_all()
      ->allow_extra_args(false);
  cmd->add_option("--mixer", a.mixer, "Mixer override (qmix|vdn)");
  cmd->add_option("--run-dir", a.run_dir, "Run directory override");
}

// Loads the file, applies overrides and resolves the run directory against
// BGC_RUN_ROOT when it is relative.
ConfigPtr load_config(const CommonArgs& a) {
  bgc_config* raw = nullptr;
  check(bgc_config_load(a.config.c_str(), &raw), "config");
  ConfigPtr cfg(raw, &bgc_config_free);
  for (const std::string& o : a.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw CliError{kExitValidation, "--set expects section.key=value, got '" + o + "'"};
    }
    check(bgc_config_set(cfg.get(), o.substr(0, eq).c_str(), o.substr(eq + 1).c_str()),
          "override");
  }
  if (!a.mixer.empty()) check(bgc_config_set(cfg.get(), "model.mixer", a.mixer.c_str()), "--mixer");
  if (!a.run_dir.empty()) {
    check(bgc_config_set(cfg.get(), "io.run_dir", a.run_dir.c_str()), "--run-dir");
  }
  const char* root = std::getenv("BGC_RUN_ROOT");
  if (root != nullptr && *root != '\0') {
    const std::filesystem::path dir(get(cfg.get(), "io.run_dir"));
    if (dir.is_relative()) {
      const std::string resolved = (std::filesystem::path(root) / dir).string();
      check(bgc_config_set(cfg.get(), "io.run_dir", resolved.c_str()), "BGC_RUN_ROOT");
    }
  }
  check(bgc_config_validate(cfg.get()), "config");
  return cfg;
}

int cmd_train(const CommonArgs& a) {
  ConfigPtr cfg = load_config(a);
  bgc_train_result r{};
  check(bgc_train(cfg.get(), nullptr, nullptr, &r), "train");
  const std::string dir = get(cfg.get(), "io.run_dir");
  std::printf("run_dir=%s env_steps=%lld episodes=%lld train_steps=%lld win_rate=%.4f "
              "return=%.6f\n",
              dir.c_str(), static_cast<long long>(r.env_steps),
              static_cast<long long>(r.episodes), static_cast<long long>(r.train_steps),
              r.final_win_rate, r.final_return);
  return kExitOk;
}

int cmd_evaluate(const CommonArgs& a, const std::string& checkpoint, bool random_policy,
                 int episodes, std::uint64_t seed, bool student) {
  if (episodes < 1) throw CliError{kExitValidation, "--episodes must be >= 1"};
  if (checkpoint.empty() && !random_policy) {
    throw CliError{kExitValidation, "--checkpoint is required (or pass --random)"};
  }
  ConfigPtr cfg = load_config(a);
  bgc_eval_result r{};
  std::vector<int> won(episodes);
  std::vector<double> returns(episodes);
  check(bgc_evaluate(cfg.get(), random_policy ? nullptr : checkpoint.c_str(), episodes, seed,
                     student ? 1 : 0, &r, won.data(), returns.data()),
        "evaluate");
  std::printf("win_rate=%.4f mean_return=%.6f episodes=%d\n", r.win_rate, r.mean_return,
              r.episodes);
  nlohmann::json rec;
  rec["checkpoint"] = random_policy ? "random" : checkpoint;
  rec["policy"] = random_policy ? "random" : (student ? "student" : "teacher");
  rec["episodes"] = r.episodes;
  rec["seed"] = seed;
  rec["win_rate"] = r.win_rate;
  rec["mean_return"] = r.mean_return;
  rec["return_stddev"] = r.return_stddev;
  rec["won"] = won;
  rec["returns"] = returns;
  std::printf("%s\n", rec.dump().c_str());
  return kExitOk;
}

int cmd_distill(const CommonArgs& a, const std::string& teacher, long long steps,
                const std::string& out_dir, int eval_episodes) {
  if (steps < 1) throw CliError{kExitValidation, "--steps must be >= 1"};
  if (eval_episodes < 1) throw CliError{kExitValidation, "--eval-episodes must be >= 1"};
  ConfigPtr cfg = load_config(a);
  const std::string dir =
      out_dir.empty() ? (std::filesystem::path(get(cfg.get(), "io.run_dir")) / "distill").string()
                      : out_dir;
  bgc_distill_result r{};
  check(bgc_distill(cfg.get(), teacher.c_str(), steps, dir.c_str(), eval_episodes, &r),
        "distill");
  std::printf("out_dir=%s agreement=%.4f teacher_win_rate=%.4f student_win_rate=%.4f "
              "win_rate_delta=%+.4f\n",
              dir.c_str(), r.agreement, r.teacher_win_rate, r.student_win_rate,
              r.win_rate_delta);
  return kExitOk;
}

int cmd_export(const CommonArgs& a, const std::string& checkpoint, int episodes,
               const std::string& out, std::uint64_t seed, bool student,
               const std::string& run_id) {
  if (episodes < 1) throw CliError{kExitValidation, "--episodes must be >= 1"};
  ConfigPtr cfg = load_config(a);
  std::int64_t rows = 0;
  check(bgc_export_embeddings(cfg.get(), checkpoint.c_str(), episodes, out.c_str(), seed,
                              student ? 1 : 0, run_id.c_str(), &rows),
        "export-embeddings");
  std::printf("wrote %lld rows to %s\n", static_cast<long long>(rows), out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-in-graph-clustering multi-agent Q-learning"};
  app.require_subcommand(1);

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "Train agents and mixer");
  add_common(train, train_args);

  CommonArgs eval_args;
  std::string eval_ckpt;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 0;
  bool eval_student = false;
  bool eval_random = false;
  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of a checkpoint");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  evaluate->add_option("-n,--episodes", eval_episodes, "Number of episodes");
  evaluate->add_option("--seed", eval_seed, "Evaluation seed");
  evaluate->add_flag("--student", eval_student, "Use the distilled student features");
  evaluate->add_flag("--random", eval_random, "Evaluate the uniformly random policy");

  CommonArgs dist_args;
  std::string teacher;
  long long dist_steps = 50000;
  std::string dist_out;
  int dist_eval = 200;
  auto* distill = app.add_subcommand("distill", "Distill a communication-free student");
  add_common(distill, dist_args);
  distill->add_option("--teacher", teacher, "Teacher checkpoint")->required();
  distill->add_option("--steps", dist_steps, "Environment steps of distillation data");
  distill->add_option("--out-dir", dist_out, "Output directory (default <run_dir>/distill)");
  distill->add_option("--eval-episodes", dist_eval, "Episodes per win-rate estimate");

  CommonArgs exp_args;
  std::string exp_ckpt, exp_out, run_id = "run";
  int exp_episodes = 10;
  std::uint64_t exp_seed = 0;
  bool exp_student = false;
  auto* exporter = app.add_subcommand("export-embeddings", "Write group features as TSV");
  add_common(exporter, exp_args);
  exporter->add_option("--checkpoint", exp_ckpt, "Checkpoint file")->required();
  exporter->add_option("-o,--out", exp_out, "Output TSV path")->required();
  exporter->add_option("-n,--episodes", exp_episodes, "Number of episodes");
  exporter->add_option("--seed", exp_seed, "Episode seed");
  exporter->add_option("--run-id", run_id, "Run identifier written in the first column");
  exporter->add_flag("--student", exp_student, "Export student estimates instead of g'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*evaluate) {
      return cmd_evaluate(eval_args, eval_ckpt, eval_random, eval_episodes, eval_seed,
                          eval_student);
    }
    if (*distill) return cmd_distill(dist_args, teacher, dist_steps, dist_out, dist_eval);
    if (*exporter) {
      return cmd_export(exp_args, exp_ckpt, exp_episodes, exp_out, exp_seed, exp_student,
                        run_id);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "bgc: %s\n", e.message.c_str());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bgc: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}

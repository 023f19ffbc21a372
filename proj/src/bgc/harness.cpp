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

#include "bgc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "bgc/checkpoint.hpp"
#include "bgc/errors.hpp"
#include "bgc/topology.hpp"
#include "json.hpp"

namespace bgc::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n01(rng);
  return m;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int random_action(const env::ActionMask& avail, std::mt19937_64& rng) {
  std::vector<int> options;
  for (std::size_t a = 0; a < avail.size(); ++a)
    if (avail[a]) options.push_back(static_cast<int>(a));
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

// Stateful per-episode driver of a policy (teacher or student mode).
class PolicyRunner {
 public:
  PolicyRunner(const Policy& p, int n_agents) : p_(p), n_(n_agents) {
    if (p.kind == PolicyKind::kRandom) return;
    if (p.model == nullptr || p.agent == nullptr) {
      throw ContractViolation("Policy: model and agent parameters are required");
    }
    if (p.source == agent::GroupSource::kStudent && p.student == nullptr) {
      throw ContractViolation("Policy: student mode needs student parameters");
    }
    hidden_ = Matrix::Zero(n_, p.model->hidden_dim);
    student_hidden_ = Matrix::Zero(n_, p.model->hidden_dim);
  }

  struct Out {
    Matrix q;
    Matrix group;
    Matrix q_student;
  };

  Out step(const Matrix& inputs, const env::AgentPositions& pos, const Matrix* noise) {
    const agent::ModelConfig& m = *p_.model;
    ad::Tape tape(false);
    const bool belief = m.kind == agent::AgentKind::kBelief;
    ad::BoolMatrix mask;
    agent::StepInputs in;
    in.input = tape.constant(inputs);
    in.hidden = tape.constant(hidden_);
    in.source = p_.source;
    in.student = p_.student;
    in.student_hidden = tape.constant(student_hidden_);
    if (belief) {
      in.noise = tape.constant(noise != nullptr ? *noise : Matrix::Zero(n_, m.group_dim));
      if (p_.source == agent::GroupSource::kTeacher) {
        mask = topology::neighbourhood_mask(pos, m.knn_k).mask;
        in.mask = &mask;
      }
    }
    ad::Var student_hidden;
    const agent::StepOutput o = agent::agent_step(tape, *p_.agent, m, in, &student_hidden);
    Out out;
    out.q = o.q.value();
    if (belief) out.group = o.group.value();
    hidden_ = o.hidden.value();
    if (belief && p_.student != nullptr) {
      if (p_.source == agent::GroupSource::kStudent) {
        student_hidden_ = student_hidden.value();
      } else {
        // Shadow the teacher with the student on the same history.
        const agent::StudentOutput s = agent::student_forward(
            tape, *p_.student, in.input, tape.constant(student_hidden_));
        student_hidden_ = s.hidden.value();
        out.q_student = agent::fuse_q(tape, *p_.agent, s.estimate, o.individual).value();
      }
    }
    return out;
  }

 private:
  const Policy& p_;
  int n_;
  Matrix hidden_;
  Matrix student_hidden_;
};

std::string format_ckpt_name(std::int64_t step) {
  std::ostringstream os;
  os << "step_" << std::setw(9) << std::setfill('0') << step << ".ckpt";
  return os.str();
}

json number_or_null(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(splitmix(master) ^ stream) ^ index);
}

replay::EpisodeRecord rollout_episode(const env::EnvConfig& env_cfg, const Policy& policy,
                                      const RolloutOptions& opts,
                                      std::vector<StepTrace>* trace) {
  env::SkirmishEnv env(env_cfg);
  env.reset(opts.seed);
  const int n = env_cfg.n_allies;
  const int n_actions = env_cfg.n_actions();
  const bool train = opts.mode == Mode::kTrain;
  const double epsilon = train ? opts.epsilon : 0.0;
  std::mt19937_64 rng(splitmix(opts.seed ^ 0xa5a5a5a5a5a5a5a5ULL));
  PolicyRunner runner(policy, n);
  const bool belief = policy.kind == PolicyKind::kAgent &&
                      policy.model->kind == agent::AgentKind::kBelief;

  replay::EpisodeRecord rec;
  rec.seed = opts.seed;
  std::vector<int> last(n, -1);
  auto record_state = [&]() {
    const auto obs = env.observe_all();
    Matrix inputs(n, static_cast<Eigen::Index>(obs.front().size()) + n + n_actions);
    for (int i = 0; i < n; ++i) {
      inputs.row(i) = to_vector(agent::build_input(obs[i], i, last[i], n, n_actions)).transpose();
    }
    rec.inputs.push_back(std::move(inputs));
    rec.states.push_back(to_vector(env.global_state()));
    std::vector<env::ActionMask> avail;
    for (int i = 0; i < n; ++i) avail.push_back(env.available_actions(i));
    rec.available.push_back(std::move(avail));
    rec.positions.push_back(env.positions());
  };

  record_state();
  while (!env.done()) {
    const std::size_t t = rec.inputs.size() - 1;
    std::vector<int> actions(n, env::kNoOp);
    StepTrace st;
    if (policy.kind == PolicyKind::kRandom) {
      for (int i = 0; i < n; ++i) actions[i] = random_action(rec.available[t][i], rng);
    } else {
      Matrix noise;
      if (train && belief) noise = gaussian(n, policy.model->group_dim, rng);
      PolicyRunner::Out o = runner.step(rec.inputs[t], rec.positions[t],
                                        train && belief ? &noise : nullptr);
      for (int i = 0; i < n; ++i) {
        actions[i] = agent::select_action(o.q.row(i).transpose(), rec.available[t][i], epsilon,
                                          rng);
      }
      st.q = std::move(o.q);
      st.group = std::move(o.group);
      st.q_student = std::move(o.q_student);
    }
    if (trace != nullptr) {
      st.positions = rec.positions[t];
      st.actions = actions;
      trace->push_back(std::move(st));
    }
    const env::StepResult r = env.step(actions);
    rec.actions.push_back(actions);
    rec.rewards.push_back(r.reward);
    rec.terminated.push_back(r.terminated ? 1 : 0);
    rec.episode_return += r.reward;
    last = actions;
    record_state();
  }
  rec.length = static_cast<int>(rec.actions.size());
  rec.won = env.won();
  return rec;
}

std::vector<replay::EpisodeRecord> collect(const env::EnvConfig& env_cfg, const Policy& policy,
                                           Mode mode, double epsilon,
                                           const std::vector<std::uint64_t>& seeds,
                                           int workers) {
  std::vector<replay::EpisodeRecord> out(seeds.size());
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(seeds.size())));
  auto job = [&](int worker) {
    for (std::size_t i = worker; i < seeds.size(); i += w) {
      RolloutOptions o;
      o.mode = mode;
      o.epsilon = epsilon;
      o.seed = seeds[i];
      out[i] = rollout_episode(env_cfg, policy, o);
    }
  };
  if (w == 1) {
    job(0);
    return out;
  }
  std::vector<std::future<void>> futures;
  for (int k = 0; k < w; ++k) futures.push_back(std::async(std::launch::async, job, k));
  for (auto& f : futures) f.get();
  return out;
}

EvalResult evaluate(const env::EnvConfig& env_cfg, const Policy& policy, int n_episodes,
                    std::uint64_t seed, int workers) {
  if (n_episodes < 1) throw ContractViolation("evaluate: n_episodes must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_episodes; ++i) seeds.push_back(derive_seed(seed, kEvalStream, i));
  const auto episodes = collect(env_cfg, policy, Mode::kEval, 0.0, seeds, workers);
  EvalResult r;
  r.episodes = n_episodes;
  for (const auto& e : episodes) {
    r.returns.push_back(e.episode_return);
    r.won.push_back(e.won ? 1 : 0);
  }
  double wins = 0.0, sum = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    wins += r.won[i];
    sum += r.returns[i];
  }
  r.win_rate = wins / n_episodes;
  r.mean_return = sum / n_episodes;
  double sq = 0.0;
  for (double x : r.returns) sq += (x - r.mean_return) * (x - r.mean_return);
  r.return_stddev = n_episodes > 1 ? std::sqrt(sq / (n_episodes - 1)) : 0.0;
  return r;
}

TrainSummary train(const config::ExperimentConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const config::TrainingConfig& tc = cfg.training;
  const fs::path dir(cfg.run_dir);
  std::error_code ec;
  fs::create_directories(dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create run directory '" + cfg.run_dir + "': " + ec.message());
  config::write_file(cfg, (dir / "config.resolved.ini").string());

  TrainSummary summary;
  summary.metrics_path = (dir / "metrics.jsonl").string();
  std::ofstream metrics(summary.metrics_path, std::ios::trunc);
  if (!metrics) throw IoError("cannot write '" + summary.metrics_path + "'");

  learner::QLearner learner(cfg, derive_seed(tc.seed, 0, 0));
  replay::ReplayBuffer buffer(tc.buffer_capacity);
  std::mt19937_64 sample_rng(derive_seed(tc.seed, 0, 1));
  const agent::ModelConfig model = cfg.model_config();
  const mixers::MixerConfig mixer_cfg = cfg.mixer_config();

  auto emit = [&](const json& j) {
    const std::string line = j.dump();
    metrics << line << '\n';
    metrics.flush();
    if (hooks.on_record) hooks.on_record(line);
  };
  auto policy = [&]() {
    Policy p;
    p.model = &model;
    p.agent = &learner.agent();
    return p;
  };

  std::int64_t next_eval = tc.eval_interval;
  std::int64_t next_ckpt = tc.checkpoint_interval;
  while (summary.env_steps < tc.total_env_steps) {
    const double epsilon = learner::anneal_epsilon(tc, summary.env_steps);
    std::vector<std::uint64_t> seeds;
    for (int w = 0; w < tc.workers; ++w) {
      seeds.push_back(derive_seed(tc.seed, kTrainStream, summary.episodes + w));
    }
    auto episodes = collect(cfg.env, policy(), Mode::kTrain, epsilon, seeds, tc.workers);
    double ret = 0.0, wins = 0.0;
    for (auto& e : episodes) {
      summary.env_steps += e.length;
      ret += e.episode_return;
      wins += e.won ? 1.0 : 0.0;
      buffer.insert(std::move(e));
    }
    summary.episodes += static_cast<std::int64_t>(seeds.size());

    std::optional<double> td, split;
    if (buffer.can_sample(tc.batch_size)) {
      double td_sum = 0.0, split_sum = 0.0;
      for (int u = 0; u < tc.updates_per_round; ++u) {
        const auto sample = buffer.sample(tc.batch_size, sample_rng);
        std::vector<const replay::EpisodeRecord*> ptrs;
        for (const auto& s : sample) ptrs.push_back(s.get());
        const learner::TrainStats st = learner.train(replay::make_batch(ptrs));
        td_sum += st.td_loss;
        split_sum += st.split_loss;
      }
      td = td_sum / tc.updates_per_round;
      split = split_sum / tc.updates_per_round;
    }
    summary.train_steps = learner.train_steps();

    std::optional<double> eval_win, eval_ret;
    if (tc.eval_interval > 0 && summary.env_steps >= next_eval) {
      const EvalResult er = evaluate(cfg.env, policy(), tc.eval_episodes, tc.seed);
      eval_win = er.win_rate;
      eval_ret = er.mean_return;
      while (next_eval <= summary.env_steps) next_eval += tc.eval_interval;
    }
    json rec;
    rec["step"] = summary.env_steps;
    rec["episode"] = summary.episodes;
    rec["train_step"] = summary.train_steps;
    rec["td"] = number_or_null(td);
    rec["split"] = number_or_null(split);
    rec["distill"] = nullptr;
    rec["epsilon"] = epsilon;
    rec["train_return"] = ret / static_cast<double>(seeds.size());
    rec["train_win_rate"] = wins / static_cast<double>(seeds.size());
    rec["eval_win_rate"] = number_or_null(eval_win);
    rec["eval_return"] = number_or_null(eval_ret);
    emit(rec);

    if (tc.checkpoint_interval > 0 && summary.env_steps >= next_ckpt) {
      checkpoint::save((dir / "checkpoints" / format_ckpt_name(summary.env_steps)).string(),
                       model, mixer_cfg, learner.agent(), learner.mixer(), nullptr,
                       summary.env_steps);
      while (next_ckpt <= summary.env_steps) next_ckpt += tc.checkpoint_interval;
    }
    if (hooks.on_round && !hooks.on_round(summary.env_steps)) break;
  }

  summary.final_eval = evaluate(cfg.env, policy(), tc.eval_episodes, tc.seed);
  json fin;
  fin["step"] = summary.env_steps;
  fin["episode"] = summary.episodes;
  fin["train_step"] = summary.train_steps;
  fin["td"] = nullptr;
  fin["split"] = nullptr;
  fin["distill"] = nullptr;
  fin["epsilon"] = learner::anneal_epsilon(tc, summary.env_steps);
  fin["eval_win_rate"] = summary.final_eval.win_rate;
  fin["eval_return"] = summary.final_eval.mean_return;
  fin["final"] = true;
  emit(fin);

  summary.final_checkpoint = (dir / "final.ckpt").string();
  checkpoint::save(summary.final_checkpoint, model, mixer_cfg, learner.agent(), learner.mixer(),
                   nullptr, summary.env_steps);
  return summary;
}

std::string DistillReport::to_json() const {
  json j;
  j["env_steps"] = env_steps;
  j["updates"] = updates;
  j["agreement_states"] = agreement_states;
  j["agreement"] = agreement;
  j["teacher_win_rate"] = teacher_win_rate;
  j["student_win_rate"] = student_win_rate;
  j["win_rate_delta"] = win_rate_delta;
  j["first_loss"] = first_loss;
  j["final_loss"] = final_loss;
  j["student_checkpoint"] = student_checkpoint;
  return j.dump();
}

AgreementResult action_agreement(const config::ExperimentConfig& cfg,
                                 const agent::AgentParams& teacher,
                                 const agent::StudentParams& student, int n_states,
                                 std::uint64_t seed) {
  if (n_states < 1) throw ContractViolation("action_agreement: n_states must be >= 1");
  const agent::ModelConfig model = cfg.model_config();
  Policy p;
  p.model = &model;
  p.agent = &teacher;
  p.student = &student;
  AgreementResult r;
  int agree = 0;
  for (std::uint64_t ep = 0; r.states < n_states; ++ep) {
    RolloutOptions o;
    o.seed = derive_seed(seed, kHeldOutStream, ep);
    std::vector<StepTrace> trace;
    const auto rec = rollout_episode(cfg.env, p, o, &trace);
    for (int t = 0; t < rec.length && r.states < n_states; ++t) {
      for (int i = 0; i < cfg.env.n_allies && r.states < n_states; ++i) {
        if (!trace[t].positions.alive[i]) continue;
        const auto& avail = rec.available[t][i];
        const int a_t = agent::greedy_action(trace[t].q.row(i).transpose(), avail);
        const int a_s = agent::greedy_action(trace[t].q_student.row(i).transpose(), avail);
        agree += a_t == a_s ? 1 : 0;
        ++r.states;
      }
    }
    if (ep > static_cast<std::uint64_t>(n_states) * 4) {
      throw ContractViolation("action_agreement: episodes yield no alive decisions");
    }
  }
  r.agreement = static_cast<double>(agree) / r.states;
  return r;
}

DistillReport distill(const config::ExperimentConfig& cfg, const std::string& teacher_checkpoint,
                      std::int64_t steps, const std::string& out_dir, int eval_episodes,
                      int agreement_states) {
  cfg.validate();
  if (steps < 1) throw ContractViolation("distill: steps must be >= 1");
  const agent::ModelConfig model = cfg.model_config();
  if (model.kind != agent::AgentKind::kBelief) {
    throw ConfigError("model.agent: distillation needs a belief (bgc) agent");
  }
  const mixers::MixerConfig mixer_cfg = cfg.mixer_config();
  const checkpoint::Checkpoint teacher = checkpoint::load(teacher_checkpoint, model, mixer_cfg);
  const config::TrainingConfig& tc = cfg.training;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

  learner::StudentTrainer trainer(cfg, derive_seed(tc.seed, kDistillStream, 0xffff));
  replay::ReplayBuffer buffer(tc.buffer_capacity);
  std::mt19937_64 sample_rng(derive_seed(tc.seed, kDistillStream, 0xfffe));
  Policy teacher_policy;
  teacher_policy.model = &model;
  teacher_policy.agent = &teacher.agent;

  DistillReport rep;
  std::int64_t episodes = 0;
  while (rep.env_steps < steps) {
    std::vector<std::uint64_t> seeds;
    for (int w = 0; w < tc.workers; ++w) {
      seeds.push_back(derive_seed(tc.seed, kDistillStream, episodes + w));
    }
    auto eps = collect(cfg.env, teacher_policy, Mode::kTrain, tc.distill_epsilon, seeds,
                       tc.workers);
    for (auto& e : eps) {
      rep.env_steps += e.length;
      buffer.insert(std::move(e));
    }
    episodes += tc.workers;
    if (!buffer.can_sample(tc.batch_size)) continue;
    for (int u = 0; u < tc.updates_per_round; ++u) {
      const auto sample = buffer.sample(tc.batch_size, sample_rng);
      std::vector<const replay::EpisodeRecord*> ptrs;
      for (const auto& s : sample) ptrs.push_back(s.get());
      const learner::DistillStats st = trainer.train(replay::make_batch(ptrs), teacher.agent);
      rep.losses.push_back(st.loss);
      ++rep.updates;
    }
  }
  if (!rep.losses.empty()) {
    rep.first_loss = rep.losses.front();
    rep.final_loss = rep.losses.back();
  }

  const AgreementResult ag =
      action_agreement(cfg, teacher.agent, trainer.student(), agreement_states, tc.seed);
  rep.agreement_states = ag.states;
  rep.agreement = ag.agreement;

  Policy student_policy = teacher_policy;
  student_policy.source = agent::GroupSource::kStudent;
  student_policy.student = &trainer.student();
  rep.teacher_win_rate = evaluate(cfg.env, teacher_policy, eval_episodes, tc.seed).win_rate;
  rep.student_win_rate = evaluate(cfg.env, student_policy, eval_episodes, tc.seed).win_rate;
  rep.win_rate_delta = rep.student_win_rate - rep.teacher_win_rate;

  rep.student_checkpoint = (fs::path(out_dir) / "student.ckpt").string();
  checkpoint::save(rep.student_checkpoint, model, mixer_cfg, teacher.agent, teacher.mixer,
                   &trainer.student(), teacher.env_steps);
  const std::string report_path = (fs::path(out_dir) / "distill_report.json").string();
  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + report_path + "'");
  out << rep.to_json() << '\n';
  return rep;
}

std::int64_t export_embeddings(const config::ExperimentConfig& cfg,
                               const std::string& checkpoint_path, int n_episodes,
                               const std::string& out_path, std::uint64_t seed,
                               bool use_student, const std::string& run_id) {
  if (n_episodes < 1) throw ContractViolation("export_embeddings: n_episodes must be >= 1");
  const agent::ModelConfig model = cfg.model_config();
  if (model.kind != agent::AgentKind::kBelief) {
    throw ConfigError("model.agent: embeddings need a belief (bgc) agent");
  }
  const checkpoint::Checkpoint ck = checkpoint::load(checkpoint_path, model, cfg.mixer_config());
  if (use_student && !ck.student) {
    throw LoadError("checkpoint '" + checkpoint_path + "' holds no student network");
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + out_path + "'");
  out << std::setprecision(17);

  Policy p;
  p.model = &model;
  p.agent = &ck.agent;
  if (use_student) {
    p.source = agent::GroupSource::kStudent;
    p.student = &*ck.student;
  }
  std::int64_t rows = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    RolloutOptions o;
    o.seed = derive_seed(seed, kEvalStream, ep);
    std::vector<StepTrace> trace;
    const auto rec = rollout_episode(cfg.env, p, o, &trace);
    for (int t = 0; t < rec.length; ++t) {
      const StepTrace& st = trace[t];
      for (int i = 0; i < cfg.env.n_allies; ++i) {
        out << run_id << "-ep" << ep << '\t' << t << '\t' << i << '\t'
            << (st.positions.alive[i] ? 1 : 0) << '\t' << st.positions.xy[i].x << '\t'
            << st.positions.xy[i].y;
        for (Eigen::Index c = 0; c < st.group.cols(); ++c) out << '\t' << st.group(i, c);
        out << '\n';
        ++rows;
      }
    }
  }
  out.flush();
  if (!out) throw IoError("failed writing '" + out_path + "'");
  return rows;
}

GroupingResult grouping_distances(const config::ExperimentConfig& cfg,
                                  const agent::AgentParams& agent_params, int n_episodes,
                                  std::uint64_t seed) {
  const agent::ModelConfig model = cfg.model_config();
  Policy p;
  p.model = &model;
  p.agent = &agent_params;
  GroupingResult g;
  double adj = 0.0, non = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    RolloutOptions o;
    o.seed = derive_seed(seed, kEvalStream, ep);
    std::vector<StepTrace> trace;
    const auto rec = rollout_episode(cfg.env, p, o, &trace);
    for (const StepTrace& st : trace) {
      const auto mask = topology::neighbourhood_mask(st.positions, model.knn_k);
      const int n = mask.size();
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (!st.positions.alive[i] || !st.positions.alive[j]) continue;
          const double d = (st.group.row(i) - st.group.row(j)).norm();
          if (mask(i, j)) {
            adj += d;
            ++g.adjacent_pairs;
          } else {
            non += d;
            ++g.non_adjacent_pairs;
          }
        }
      }
    }
  }
  g.adjacent_mean = g.adjacent_pairs > 0 ? adj / g.adjacent_pairs : 0.0;
  g.non_adjacent_mean = g.non_adjacent_pairs > 0 ? non / g.non_adjacent_pairs : 0.0;
  return g;
}

}  // namespace bgc::harness

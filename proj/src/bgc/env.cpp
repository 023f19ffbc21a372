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

#include "bgc/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "bgc/errors.hpp"

namespace bgc::env {
namespace {

constexpr int kMoveDx[5] = {0, 0, 0, 1, -1};
constexpr int kMoveDy[5] = {0, 1, -1, 0, 0};

double distance(const Unit& a, const Unit& b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

int spawn_width(const EnvConfig& c) { return std::max(1, c.grid_width / 3); }

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("env." + field + ": " + why);
}

}  // namespace

void EnvConfig::validate() const {
  require(grid_width >= 1, "grid_width", "must be >= 1");
  require(grid_height >= 1, "grid_height", "must be >= 1");
  require(n_allies >= 1, "n_allies", "must be >= 1");
  require(n_enemies >= 1, "n_enemies", "must be >= 1");
  require(sight_range > 0.0, "sight_range", "must be > 0");
  require(attack_range > 0.0, "attack_range", "must be > 0");
  require(attack_range <= sight_range, "attack_range", "must not exceed sight_range");
  require(ally_hp >= 1, "ally_hp", "must be >= 1");
  require(enemy_hp >= 1, "enemy_hp", "must be >= 1");
  require(damage >= 1, "damage", "must be >= 1");
  require(max_steps >= 1, "max_steps", "must be >= 1");
  require(ally_clusters >= 1, "ally_clusters", "must be >= 1");
  const int third = spawn_width(*this);
  require(grid_width >= 3, "grid_width", "must be >= 3 to hold both spawn zones");
  require(n_allies <= third * grid_height, "n_allies", "does not fit the left spawn zone");
  require(n_enemies <= third * grid_height, "n_enemies", "does not fit the right spawn zone");
  if (ally_clusters > 1) {
    const int per_cluster = (n_allies + ally_clusters - 1) / ally_clusters;
    require(ally_clusters <= n_allies, "ally_clusters", "must not exceed n_allies");
    require(per_cluster <= 4, "ally_clusters", "clusters hold at most 4 allies");
    require(third >= 2, "ally_clusters", "spawn zone must be at least 2 cells wide");
    require(grid_height / ally_clusters >= 5, "ally_clusters",
            "need grid_height / ally_clusters >= 5 for separated clusters");
  }
}

SkirmishEnv::SkirmishEnv(EnvConfig config) : config_(config) {
  config_.validate();
  reset();
}

void SkirmishEnv::reset() { reset(config_.seed); }

void SkirmishEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  allies_.assign(config_.n_allies, Unit{0, 0, config_.ally_hp});
  enemies_.assign(config_.n_enemies, Unit{0, 0, config_.enemy_hp});
  steps_ = 0;
  done_ = false;
  won_ = false;
  spawn(rng);
}

void SkirmishEnv::spawn(std::mt19937_64& rng) {
  const int third = spawn_width(config_);
  const int h = config_.grid_height;
  const int w = config_.grid_width;

  auto shuffled_cells = [&](int x_begin, int x_end) {
    std::vector<std::pair<int, int>> cells;
    for (int x = x_begin; x < x_end; ++x)
      for (int y = 0; y < h; ++y) cells.emplace_back(x, y);
    std::shuffle(cells.begin(), cells.end(), rng);
    return cells;
  };

  if (config_.ally_clusters <= 1) {
    const auto cells = shuffled_cells(0, third);
    for (int i = 0; i < config_.n_allies; ++i) {
      allies_[i].x = cells[i].first;
      allies_[i].y = cells[i].second;
    }
  } else {
    // Cluster m occupies a 2x2 box centred vertically in band m; boxes in
    // adjacent bands are at least 4 cells apart.
    const int clusters = config_.ally_clusters;
    const int per_cluster = (config_.n_allies + clusters - 1) / clusters;
    const int band = h / clusters;
    std::uniform_int_distribution<int> box_x(0, third - 2);
    for (int m = 0; m < clusters; ++m) {
      const int x0 = box_x(rng);
      const int y0 = m * band + (band - 2) / 2;
      std::vector<std::pair<int, int>> box = {
          {x0, y0}, {x0 + 1, y0}, {x0, y0 + 1}, {x0 + 1, y0 + 1}};
      std::shuffle(box.begin(), box.end(), rng);
      for (int s = 0; s < per_cluster; ++s) {
        const int i = m * per_cluster + s;
        if (i >= config_.n_allies) break;
        allies_[i].x = box[s].first;
        allies_[i].y = box[s].second;
      }
    }
  }

  const auto cells = shuffled_cells(w - third, w);
  for (int k = 0; k < config_.n_enemies; ++k) {
    enemies_[k].x = cells[k].first;
    enemies_[k].y = cells[k].second;
  }
}

bool SkirmishEnv::in_bounds(int x, int y) const {
  return x >= 0 && y >= 0 && x < config_.grid_width && y < config_.grid_height;
}

bool SkirmishEnv::occupied(int x, int y) const {
  for (const Unit& u : allies_)
    if (u.alive() && u.x == x && u.y == y) return true;
  for (const Unit& u : enemies_)
    if (u.alive() && u.x == x && u.y == y) return true;
  return false;
}

void SkirmishEnv::check_agent(int agent) const {
  if (agent < 0 || agent >= config_.n_allies) {
    throw ContractViolation("agent index " + std::to_string(agent) +
                            " out of range [0, " + std::to_string(config_.n_allies) + ")");
  }
}

ActionMask SkirmishEnv::available_actions(int agent) const {
  check_agent(agent);
  ActionMask mask(config_.n_actions(), 0);
  mask[kNoOp] = 1;
  const Unit& me = allies_[agent];
  if (!me.alive() || done_) return mask;
  for (int a = kNorth; a <= kWest; ++a) {
    const int nx = me.x + kMoveDx[a];
    const int ny = me.y + kMoveDy[a];
    if (in_bounds(nx, ny) && !occupied(nx, ny)) mask[a] = 1;
  }
  for (int k = 0; k < config_.n_enemies; ++k) {
    const Unit& e = enemies_[k];
    if (e.alive() && distance(me, e) <= config_.attack_range) mask[kFirstAttack + k] = 1;
  }
  return mask;
}

Observation SkirmishEnv::observe(int agent) const {
  check_agent(agent);
  Observation obs(config_.obs_dim(), 0.0);
  const Unit& me = allies_[agent];
  if (!me.alive()) return obs;
  const double sight = config_.sight_range;
  std::size_t slot = 0;
  auto write = [&](const Unit& u, int hp_max, bool enemy) {
    if (u.alive()) {
      const double d = distance(me, u);
      if (d <= sight) {
        obs[slot + 0] = (u.x - me.x) / sight;
        obs[slot + 1] = (u.y - me.y) / sight;
        obs[slot + 2] = d / sight;
        obs[slot + 3] = static_cast<double>(u.hp) / hp_max;
        obs[slot + 4] = enemy ? 1.0 : 0.0;
      }
    }
    slot += 5;
  };
  for (int j = 0; j < config_.n_allies; ++j) {
    if (j != agent) write(allies_[j], config_.ally_hp, false);
  }
  for (const Unit& e : enemies_) write(e, config_.enemy_hp, true);
  obs[slot] = static_cast<double>(me.hp) / config_.ally_hp;
  return obs;
}

std::vector<Observation> SkirmishEnv::observe_all() const {
  std::vector<Observation> out;
  out.reserve(config_.n_allies);
  for (int i = 0; i < config_.n_allies; ++i) out.push_back(observe(i));
  return out;
}

GlobalState SkirmishEnv::global_state() const {
  GlobalState s;
  s.reserve(config_.state_dim());
  const double wx = std::max(1, config_.grid_width - 1);
  const double wy = std::max(1, config_.grid_height - 1);
  auto put = [&](const Unit& u, int hp_max) {
    if (u.alive()) {
      s.push_back(u.x / wx);
      s.push_back(u.y / wy);
      s.push_back(static_cast<double>(u.hp) / hp_max);
      s.push_back(1.0);
    } else {
      s.insert(s.end(), 4, 0.0);
    }
  };
  for (const Unit& u : allies_) put(u, config_.ally_hp);
  for (const Unit& u : enemies_) put(u, config_.enemy_hp);
  s.push_back(static_cast<double>(steps_) / config_.max_steps);
  return s;
}

AgentPositions SkirmishEnv::positions() const {
  AgentPositions p;
  const Vec2 sentinel = dead_sentinel(config_);
  for (const Unit& u : allies_) {
    p.alive.push_back(u.alive());
    p.xy.push_back(u.alive() ? Vec2{static_cast<double>(u.x), static_cast<double>(u.y)}
                             : sentinel);
  }
  return p;
}

StepResult SkirmishEnv::step(const std::vector<int>& joint_action) {
  if (done_) throw ContractViolation("step() called on a finished episode");
  if (static_cast<int>(joint_action.size()) != config_.n_allies) {
    throw ContractViolation("joint action has " + std::to_string(joint_action.size()) +
                            " entries, expected " + std::to_string(config_.n_allies));
  }
  for (int i = 0; i < config_.n_allies; ++i) {
    const int a = joint_action[i];
    if (a < 0 || a >= config_.n_actions() || !available_actions(i)[a]) {
      throw ContractViolation("agent " + std::to_string(i) + ": action " +
                              std::to_string(a) + " is not available");
    }
  }

  int dealt = 0;
  int kills = 0;
  for (int i = 0; i < config_.n_allies; ++i) {
    Unit& me = allies_[i];
    if (!me.alive()) continue;
    const int a = joint_action[i];
    if (a >= kNorth && a <= kWest) {
      const int nx = me.x + kMoveDx[a];
      const int ny = me.y + kMoveDy[a];
      if (in_bounds(nx, ny) && !occupied(nx, ny)) {
        me.x = nx;
        me.y = ny;
      }
    } else if (a >= kFirstAttack) {
      Unit& target = enemies_[a - kFirstAttack];
      if (!target.alive()) continue;  // already killed earlier this step
      const int hit = std::min(config_.damage, target.hp);
      target.hp -= hit;
      dealt += hit;
      if (!target.alive()) ++kills;
    }
  }

  const bool enemies_left = std::any_of(enemies_.begin(), enemies_.end(),
                                        [](const Unit& u) { return u.alive(); });
  if (enemies_left) enemy_turn();
  ++steps_;

  const bool allies_left = std::any_of(allies_.begin(), allies_.end(),
                                       [](const Unit& u) { return u.alive(); });
  won_ = !enemies_left;
  done_ = !enemies_left || !allies_left || steps_ >= config_.max_steps;

  StepResult r;
  r.reward = (dealt + 10.0 * kills + (won_ ? 200.0 : 0.0)) / config_.reward_scale();
  r.terminated = done_;
  r.won = won_;
  r.observations = observe_all();
  r.state = global_state();
  for (int i = 0; i < config_.n_allies; ++i) r.available.push_back(available_actions(i));
  return r;
}

void SkirmishEnv::enemy_turn() {
  for (Unit& e : enemies_) {
    if (!e.alive()) continue;
    int target = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < config_.n_allies; ++i) {
      if (!allies_[i].alive()) continue;
      const double d = distance(e, allies_[i]);
      if (d < best) {
        best = d;
        target = i;
      }
    }
    if (target < 0) return;
    Unit& victim = allies_[target];
    if (best <= config_.attack_range) {
      victim.hp = std::max(0, victim.hp - config_.damage);
      continue;
    }
    int move = kNoOp;
    double move_dist = best;
    for (int a = kNorth; a <= kWest; ++a) {
      const int nx = e.x + kMoveDx[a];
      const int ny = e.y + kMoveDy[a];
      if (!in_bounds(nx, ny) || occupied(nx, ny)) continue;
      const double d = std::hypot(static_cast<double>(nx - victim.x),
                                  static_cast<double>(ny - victim.y));
      if (d < move_dist) {
        move_dist = d;
        move = a;
      }
    }
    e.x += kMoveDx[move];
    e.y += kMoveDy[move];
  }
}

void SkirmishEnv::place_ally(int index, int x, int y) {
  check_agent(index);
  if (!in_bounds(x, y)) throw ContractViolation("place_ally: out of bounds");
  Unit& u = allies_[index];
  if ((u.x != x || u.y != y) && occupied(x, y)) {
    throw ContractViolation("place_ally: cell occupied");
  }
  u.x = x;
  u.y = y;
}

void SkirmishEnv::place_enemy(int index, int x, int y) {
  if (index < 0 || index >= config_.n_enemies) throw ContractViolation("enemy index");
  if (!in_bounds(x, y)) throw ContractViolation("place_enemy: out of bounds");
  Unit& u = enemies_[index];
  if ((u.x != x || u.y != y) && occupied(x, y)) {
    throw ContractViolation("place_enemy: cell occupied");
  }
  u.x = x;
  u.y = y;
}

void SkirmishEnv::set_ally_hp(int index, int hp) {
  check_agent(index);
  allies_[index].hp = std::clamp(hp, 0, config_.ally_hp);
}

void SkirmishEnv::set_enemy_hp(int index, int hp) {
  if (index < 0 || index >= config_.n_enemies) throw ContractViolation("enemy index");
  enemies_[index].hp = std::clamp(hp, 0, config_.enemy_hp);
}

void write_trace_record(std::ostream& out, const SkirmishEnv& env,
                        const std::vector<int>& actions, double reward) {
  nlohmann::json rec;
  rec["step"] = env.steps();
  auto units = [](const std::vector<Unit>& us) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Unit& u : us) arr.push_back({u.x, u.y, u.hp});
    return arr;
  };
  rec["allies"] = units(env.allies());
  rec["enemies"] = units(env.enemies());
  rec["actions"] = actions;
  rec["reward"] = reward;
  out << rec.dump() << '\n';
}

}  // namespace bgc::env

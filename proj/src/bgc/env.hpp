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

#ifndef BGC_ENV_HPP_
#define BGC_ENV_HPP_

// "Squad skirmish": a small cooperative gridworld battle. A team of learning
// allies fights scripted enemies. Every ally is a decentralized agent with a
// partial view of the battlefield; the team shares a single reward.
//
// Rules at a glance:
//  * Allies spawn in the left third of the grid, enemies in the right third.
//  * Agent actions: 0 no-op, 1 north (+y), 2 south (-y), 3 east (+x),
//    4 west (-x), 5 + k attack enemy k.
//  * Allies act first, in index order; then each surviving enemy focus-fires
//    the nearest ally in range, or steps greedily toward it.
//  * Team reward per step is (damage dealt + 10 * kills + 200 * win) divided
//    by (200 + 10 * n_enemies + total enemy hp), so an episode return lies in
//    [0, 1].

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

namespace bgc::env {

enum Action : int {
  kNoOp = 0,
  kNorth = 1,
  kSouth = 2,
  kEast = 3,
  kWest = 4,
  kFirstAttack = 5,
};

struct EnvConfig {
  int grid_width = 12;
  int grid_height = 8;
  int n_allies = 4;
  int n_enemies = 4;
  double sight_range = 6.0;
  double attack_range = 3.0;
  int ally_hp = 5;
  int enemy_hp = 4;
  int damage = 1;
  int max_steps = 40;
  std::uint64_t seed = 0;
  // > 1 spawns allies as that many tight, well-separated clusters stacked
  // vertically in the left third (used to probe kNN grouping).
  int ally_clusters = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;

  int n_actions() const { return kFirstAttack + n_enemies; }
  int obs_dim() const { return 5 * (n_allies - 1 + n_enemies) + 1; }
  int state_dim() const { return 4 * (n_allies + n_enemies) + 1; }
  // Maximum undiscounted episode return before scaling.
  double reward_scale() const {
    return 200.0 + 10.0 * n_enemies + static_cast<double>(n_enemies) * enemy_hp;
  }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

// Ally positions for the topology module. Dead allies share a sentinel far
// outside the grid so that kNN clusters them together.
struct AgentPositions {
  std::vector<Vec2> xy;
  std::vector<bool> alive;
};

using Observation = std::vector<double>;
using GlobalState = std::vector<double>;
using ActionMask = std::vector<std::uint8_t>;

struct StepResult {
  std::vector<Observation> observations;
  GlobalState state;
  double reward = 0.0;
  bool terminated = false;
  bool won = false;
  std::vector<ActionMask> available;
};

struct Unit {
  int x = 0;
  int y = 0;
  int hp = 0;
  bool alive() const { return hp > 0; }
};

class SkirmishEnv {
 public:
  explicit SkirmishEnv(EnvConfig config);

  // Resets with the config seed, or an explicit one.
  void reset();
  void reset(std::uint64_t seed);

  StepResult step(const std::vector<int>& joint_action);

  ActionMask available_actions(int agent) const;
  Observation observe(int agent) const;
  std::vector<Observation> observe_all() const;
  GlobalState global_state() const;
  AgentPositions positions() const;

  const EnvConfig& config() const { return config_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  bool won() const { return won_; }
  const std::vector<Unit>& allies() const { return allies_; }
  const std::vector<Unit>& enemies() const { return enemies_; }

  // Scenario editing for tests and demos. Coordinates must be in bounds and
  // the target cell free; hp 0 removes the unit.
  void place_ally(int index, int x, int y);
  void place_enemy(int index, int x, int y);
  void set_ally_hp(int index, int hp);
  void set_enemy_hp(int index, int hp);

  static Vec2 dead_sentinel(const EnvConfig& c) {
    return {-4.0 * c.grid_width, -4.0 * c.grid_height};
  }

 private:
  bool in_bounds(int x, int y) const;
  bool occupied(int x, int y) const;
  void check_agent(int agent) const;
  void spawn(std::mt19937_64& rng);
  void enemy_turn();

  EnvConfig config_;
  std::vector<Unit> allies_;
  std::vector<Unit> enemies_;
  int steps_ = 0;
  bool done_ = false;
  bool won_ = false;
};

// One line-delimited JSON debugging record per step.
void write_trace_record(std::ostream& out, const SkirmishEnv& env,
                        const std::vector<int>& actions, double reward);

}  // namespace bgc::env

#endif  // BGC_ENV_HPP_

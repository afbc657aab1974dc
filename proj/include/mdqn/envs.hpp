#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mdqn/grid.hpp"

namespace mdqn {

enum class EnvKind { kSync, kWarehouse, kPredatorPrey };

std::string_view env_name(EnvKind kind);
EnvKind env_kind_from_name(std::string_view name);

struct EnvConfig {
  EnvKind kind = EnvKind::kSync;
  int height = 5;
  int width = 5;
  double reward = 100.0;
  bool cooperative = true;
  // Coordinates divided by (dimension - 1) when set.
  bool normalize = true;
  int max_steps = 100;
  int boxes = 4;                  // warehouse
  int num_prey = 2;               // predator prey
  std::vector<GridPos> barriers;  // predator prey
};

// Board size, reward constant and entity counts used when a config names only the environment.
EnvConfig default_env_config(EnvKind kind);

struct EnvState {
  std::array<GridPos, kNumAgents> agents{};
  std::vector<GridPos> prey;
  std::vector<std::uint8_t> prey_alive;
  std::vector<GridPos> barriers;
  std::array<bool, kNumAgents> carrying{false, false};
  std::optional<GridPos> box;
  GridPos last_box_corner{};
  int boxes_delivered = 0;
  int step_count = 0;
  bool terminal = false;
};

struct StepResult {
  std::array<Observation, kNumAgents> next_obs;
  std::array<double, kNumAgents> rewards{0.0, 0.0};
  bool terminal = false;
};

// Observation coordinates owned by the observing agent and by the other agent. The split-stream
// network feeds the two index sets through separate input branches.
struct SplitLayout {
  std::vector<int> self_indices;
  std::vector<int> other_indices;
};

// Sentinel written into observation slots for entities that are absent (captured prey, no box
// waiting on a shelf).
inline constexpr double kAbsent = -1.0;

class Environment {
 public:
  explicit Environment(EnvConfig config);
  virtual ~Environment() = default;

  Environment(const Environment&) = default;
  Environment& operator=(const Environment&) = default;

  std::array<Observation, kNumAgents> reset(std::uint64_t seed);
  StepResult step(const JointAction& joint);

  // Self-first encoding of the current state from `agent`'s frame of reference.
  Observation observe(int agent) const;

  virtual int num_actions() const = 0;
  virtual int observation_dim() const = 0;
  virtual SplitLayout split_layout() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  // Best episode return reachable from a fresh reset.
  virtual double max_episode_return() const = 0;

  std::string render() const;

  const EnvConfig& config() const { return config_; }
  const EnvState& state() const { return state_; }
  bool terminal() const { return state_.terminal; }
  bool in_bounds(GridPos p) const;

  // Replaces the board. Positions are validated against the board; the episode is treated as live.
  void set_state(EnvState state);

 protected:
  virtual void place_entities(std::mt19937_64& rng) = 0;
  virtual void apply(const JointAction& joint, StepResult& result) = 0;
  virtual void encode(int agent, Observation& out) const = 0;
  // Two-character board cell used by render(); agents are drawn on top.
  virtual std::string cell_token(GridPos p) const;

  GridPos clamp_move(GridPos p, Action a) const;
  double coord_row(int row) const;
  double coord_col(int col) const;
  void check_legal(const JointAction& joint) const;
  GridPos random_free_cell(std::mt19937_64& rng, const std::vector<GridPos>& taken) const;

  EnvConfig config_;
  EnvState state_;
  std::mt19937_64 rng_;
};

// Two agents must enter opposite corners (0,0) and (H-1,W-1) on the same step. The episode ends as
// soon as either corner is occupied.
class SyncEnv final : public Environment {
 public:
  explicit SyncEnv(EnvConfig config);
  int num_actions() const override { return 5; }
  int observation_dim() const override { return 4; }
  SplitLayout split_layout() const override;
  std::unique_ptr<Environment> clone() const override;
  double max_episode_return() const override { return config_.reward; }

  bool is_goal(GridPos p) const;

 protected:
  void place_entities(std::mt19937_64& rng) override;
  void apply(const JointAction& joint, StepResult& result) override;
  void encode(int agent, Observation& out) const override;
  std::string cell_token(GridPos p) const override;
};

// Boxes appear on one of two corner shelves and must be carried to the centre cell. Each delivery
// spawns the next box on the opposite shelf until `boxes` have been delivered.
class WarehouseEnv final : public Environment {
 public:
  explicit WarehouseEnv(EnvConfig config);
  int num_actions() const override { return 4; }
  int observation_dim() const override { return 8; }
  SplitLayout split_layout() const override;
  std::unique_ptr<Environment> clone() const override;
  double max_episode_return() const override { return config_.reward * config_.boxes; }

  GridPos center() const { return {config_.height / 2, config_.width / 2}; }
  GridPos opposite_shelf(GridPos corner) const;

 protected:
  void place_entities(std::mt19937_64& rng) override;
  void apply(const JointAction& joint, StepResult& result) override;
  void encode(int agent, Observation& out) const override;
  std::string cell_token(GridPos p) const override;
};

// Two predators chase randomly moving prey around fixed barriers.
class PredatorPreyEnv final : public Environment {
 public:
  explicit PredatorPreyEnv(EnvConfig config);
  int num_actions() const override { return 4; }
  int observation_dim() const override { return 4 + 3 * config_.num_prey; }
  SplitLayout split_layout() const override;
  std::unique_ptr<Environment> clone() const override;
  double max_episode_return() const override { return config_.reward * config_.num_prey; }

  bool is_barrier(GridPos p) const;

 protected:
  void place_entities(std::mt19937_64& rng) override;
  void apply(const JointAction& joint, StepResult& result) override;
  void encode(int agent, Observation& out) const override;
  std::string cell_token(GridPos p) const override;

 private:
  GridPos blocked_move(GridPos p, Action a) const;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

}  // namespace mdqn

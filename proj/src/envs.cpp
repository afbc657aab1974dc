#include "mdqn/envs.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <utility>

#include "mdqn/errors.hpp"

namespace mdqn {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kUp: return "up";
    case Action::kRight: return "right";
    case Action::kDown: return "down";
    case Action::kLeft: return "left";
    case Action::kStay: return "stay";
  }
  return "?";
}

GridPos displaced(GridPos p, Action a) {
  switch (a) {
    case Action::kUp: return {p.row - 1, p.col};
    case Action::kRight: return {p.row, p.col + 1};
    case Action::kDown: return {p.row + 1, p.col};
    case Action::kLeft: return {p.row, p.col - 1};
    case Action::kStay: return p;
  }
  return p;
}

std::string_view env_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::kSync: return "sync";
    case EnvKind::kWarehouse: return "warehouse";
    case EnvKind::kPredatorPrey: return "predator_prey";
  }
  return "?";
}

EnvKind env_kind_from_name(std::string_view name) {
  if (name == "sync") return EnvKind::kSync;
  if (name == "warehouse") return EnvKind::kWarehouse;
  if (name == "predator_prey") return EnvKind::kPredatorPrey;
  throw ConfigError("environment.name: unknown environment '" + std::string(name) + "'");
}

EnvConfig default_env_config(EnvKind kind) {
  EnvConfig c;
  c.kind = kind;
  switch (kind) {
    case EnvKind::kSync:
      c.height = c.width = 5;
      c.reward = 100.0;
      break;
    case EnvKind::kWarehouse:
      c.height = c.width = 7;
      c.reward = 10.0;
      c.boxes = 4;
      break;
    case EnvKind::kPredatorPrey:
      c.height = c.width = 5;
      c.reward = 10.0;
      c.num_prey = 2;
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  if (config_.height < 2 || config_.width < 2) {
    throw ConfigError("environment.size: board must be at least 2x2");
  }
  if (config_.max_steps < 1) {
    throw ConfigError("max_episode_length: must be positive");
  }
}

std::array<Observation, kNumAgents> Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_ = EnvState{};
  state_.barriers = config_.barriers;
  place_entities(rng_);
  return {observe(0), observe(1)};
}

StepResult Environment::step(const JointAction& joint) {
  if (state_.terminal) throw UsageError("step() called on a terminal state; call reset() first");
  check_legal(joint);
  StepResult result;
  apply(joint, result);
  ++state_.step_count;
  if (state_.step_count >= config_.max_steps) state_.terminal = true;
  result.terminal = state_.terminal;
  result.next_obs = {observe(0), observe(1)};
  return result;
}

Observation Environment::observe(int agent) const {
  if (agent < 0 || agent >= kNumAgents) throw UsageError("observe(): agent id must be 0 or 1");
  Observation out;
  out.reserve(static_cast<std::size_t>(observation_dim()));
  encode(agent, out);
  return out;
}

bool Environment::in_bounds(GridPos p) const {
  return p.row >= 0 && p.row < config_.height && p.col >= 0 && p.col < config_.width;
}

void Environment::set_state(EnvState state) {
  for (const auto& p : state.agents) {
    if (!in_bounds(p)) throw UsageError("set_state(): agent outside the board");
  }
  if (state.box && !in_bounds(*state.box)) throw UsageError("set_state(): box outside the board");
  if (state.prey_alive.size() != state.prey.size()) state.prey_alive.assign(state.prey.size(), 1);
  state.terminal = false;
  state_ = std::move(state);
}

GridPos Environment::clamp_move(GridPos p, Action a) const {
  const GridPos next = displaced(p, a);
  return in_bounds(next) ? next : p;
}

double Environment::coord_row(int row) const {
  if (!config_.normalize) return row;
  return config_.height > 1 ? static_cast<double>(row) / (config_.height - 1) : 0.0;
}

double Environment::coord_col(int col) const {
  if (!config_.normalize) return col;
  return config_.width > 1 ? static_cast<double>(col) / (config_.width - 1) : 0.0;
}

void Environment::check_legal(const JointAction& joint) const {
  for (Action a : joint.per_agent) {
    const int i = action_index(a);
    if (i < 0 || i >= num_actions()) {
      throw UsageError("step(): action '" + std::string(action_name(a)) + "' is not legal in " +
                       std::string(env_name(config_.kind)));
    }
  }
}

GridPos Environment::random_free_cell(std::mt19937_64& rng, const std::vector<GridPos>& taken) const {
  std::vector<GridPos> free;
  for (int r = 0; r < config_.height; ++r) {
    for (int c = 0; c < config_.width; ++c) {
      const GridPos p{r, c};
      if (std::find(taken.begin(), taken.end(), p) == taken.end()) free.push_back(p);
    }
  }
  if (free.empty()) throw ConfigError("environment.size: board too small to place all entities");
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  return free[pick(rng)];
}

std::string Environment::cell_token(GridPos) const { return ". "; }

std::string Environment::render() const {
  std::ostringstream out;
  out << env_name(config_.kind) << " step " << state_.step_count << (state_.terminal ? " (terminal)" : "")
      << '\n';
  for (int r = 0; r < config_.height; ++r) {
    for (int c = 0; c < config_.width; ++c) {
      const GridPos p{r, c};
      const bool a0 = state_.agents[0] == p;
      const bool a1 = state_.agents[1] == p;
      if (a0 && a1) {
        out << "AA";
      } else if (a0) {
        out << "A0";
      } else if (a1) {
        out << "A1";
      } else {
        out << cell_token(p);
      }
      out << (c + 1 < config_.width ? " " : "");
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Sync

SyncEnv::SyncEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.height * config_.width - 2 < kNumAgents) {
    throw ConfigError("environment.size: sync board too small to place both agents off the goals");
  }
}

bool SyncEnv::is_goal(GridPos p) const {
  return p == GridPos{0, 0} || p == GridPos{config_.height - 1, config_.width - 1};
}

SplitLayout SyncEnv::split_layout() const { return {{0, 1}, {2, 3}}; }

std::unique_ptr<Environment> SyncEnv::clone() const { return std::make_unique<SyncEnv>(*this); }

void SyncEnv::place_entities(std::mt19937_64& rng) {
  std::vector<GridPos> taken{{0, 0}, {config_.height - 1, config_.width - 1}};
  for (int i = 0; i < kNumAgents; ++i) {
    state_.agents[static_cast<std::size_t>(i)] = random_free_cell(rng, taken);
    taken.push_back(state_.agents[static_cast<std::size_t>(i)]);
  }
}

void SyncEnv::apply(const JointAction& joint, StepResult& result) {
  for (std::size_t i = 0; i < kNumAgents; ++i) state_.agents[i] = clamp_move(state_.agents[i], joint.per_agent[i]);
  const GridPos top_left{0, 0};
  const GridPos bottom_right{config_.height - 1, config_.width - 1};
  const auto& a = state_.agents;
  if (is_goal(a[0]) || is_goal(a[1])) {
    state_.terminal = true;
    const bool covered = (a[0] == top_left && a[1] == bottom_right) || (a[0] == bottom_right && a[1] == top_left);
    if (covered) result.rewards = {config_.reward, config_.reward};
  }
}

void SyncEnv::encode(int agent, Observation& out) const {
  const auto& self = state_.agents[static_cast<std::size_t>(agent)];
  const auto& other = state_.agents[static_cast<std::size_t>(1 - agent)];
  out = {coord_row(self.row), coord_col(self.col), coord_row(other.row), coord_col(other.col)};
}

std::string SyncEnv::cell_token(GridPos p) const { return is_goal(p) ? "* " : ". "; }

// ---------------------------------------------------------------------------
// Warehouse

WarehouseEnv::WarehouseEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.height < 3 || config_.width < 3) {
    throw ConfigError("environment.size: warehouse needs at least a 3x3 board so the centre is not a shelf");
  }
  if (config_.boxes < 1) throw ConfigError("environment.boxes: must be at least 1");
}

GridPos WarehouseEnv::opposite_shelf(GridPos corner) const {
  return corner == GridPos{0, 0} ? GridPos{config_.height - 1, config_.width - 1} : GridPos{0, 0};
}

SplitLayout WarehouseEnv::split_layout() const { return {{0, 1, 2, 6, 7}, {3, 4, 5}}; }

std::unique_ptr<Environment> WarehouseEnv::clone() const { return std::make_unique<WarehouseEnv>(*this); }

void WarehouseEnv::place_entities(std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  const GridPos corner = coin(rng) ? GridPos{0, 0} : GridPos{config_.height - 1, config_.width - 1};
  state_.box = corner;
  state_.last_box_corner = corner;
  std::vector<GridPos> taken{corner, center()};
  for (std::size_t i = 0; i < kNumAgents; ++i) {
    state_.agents[i] = random_free_cell(rng, taken);
    taken.push_back(state_.agents[i]);
  }
}

void WarehouseEnv::apply(const JointAction& joint, StepResult& result) {
  for (std::size_t i = 0; i < kNumAgents; ++i) state_.agents[i] = clamp_move(state_.agents[i], joint.per_agent[i]);

  // Deliveries first so that a box spawned by a delivery can be collected in the same step by an
  // agent already waiting on the opposite shelf.
  for (std::size_t i = 0; i < kNumAgents && !state_.terminal; ++i) {
    if (!state_.carrying[i] || state_.agents[i] != center()) continue;
    state_.carrying[i] = false;
    ++state_.boxes_delivered;
    if (config_.cooperative) {
      result.rewards[0] += config_.reward;
      result.rewards[1] += config_.reward;
    } else {
      result.rewards[i] += config_.reward;
    }
    if (state_.boxes_delivered >= config_.boxes) {
      state_.terminal = true;
    } else {
      state_.last_box_corner = opposite_shelf(state_.last_box_corner);
      state_.box = state_.last_box_corner;
    }
  }
  for (std::size_t i = 0; i < kNumAgents && state_.box; ++i) {
    if (!state_.carrying[i] && state_.agents[i] == *state_.box) {
      state_.carrying[i] = true;
      state_.box.reset();
    }
  }
}

void WarehouseEnv::encode(int agent, Observation& out) const {
  const auto self = static_cast<std::size_t>(agent);
  const auto other = static_cast<std::size_t>(1 - agent);
  const auto& s = state_.agents[self];
  const auto& o = state_.agents[other];
  out = {coord_row(s.row), coord_col(s.col), state_.carrying[self] ? 1.0 : 0.0,
         coord_row(o.row), coord_col(o.col), state_.carrying[other] ? 1.0 : 0.0};
  if (state_.box) {
    out.push_back(coord_row(state_.box->row));
    out.push_back(coord_col(state_.box->col));
  } else {
    out.push_back(kAbsent);
    out.push_back(kAbsent);
  }
}

std::string WarehouseEnv::cell_token(GridPos p) const {
  if (state_.box && *state_.box == p) return "B ";
  if (p == center()) return "C ";
  return ". ";
}

// ---------------------------------------------------------------------------
// Predator prey

PredatorPreyEnv::PredatorPreyEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.num_prey < 1) throw ConfigError("environment.num_prey: must be at least 1");
  for (const auto& b : config_.barriers) {
    if (!in_bounds(b)) throw ConfigError("environment.barriers: barrier outside the board");
  }
  std::vector<GridPos> unique = config_.barriers;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (config_.height * config_.width - static_cast<int>(unique.size()) < kNumAgents + config_.num_prey) {
    throw ConfigError("environment.size: board too small to place predators and prey distinctly");
  }
}

bool PredatorPreyEnv::is_barrier(GridPos p) const {
  return std::find(state_.barriers.begin(), state_.barriers.end(), p) != state_.barriers.end();
}

SplitLayout PredatorPreyEnv::split_layout() const {
  SplitLayout layout{{0, 1}, {2, 3}};
  for (int i = 4; i < observation_dim(); ++i) layout.self_indices.push_back(i);
  return layout;
}

std::unique_ptr<Environment> PredatorPreyEnv::clone() const { return std::make_unique<PredatorPreyEnv>(*this); }

GridPos PredatorPreyEnv::blocked_move(GridPos p, Action a) const {
  const GridPos next = clamp_move(p, a);
  return is_barrier(next) ? p : next;
}

void PredatorPreyEnv::place_entities(std::mt19937_64& rng) {
  std::vector<GridPos> taken = state_.barriers;
  for (std::size_t i = 0; i < kNumAgents; ++i) {
    state_.agents[i] = random_free_cell(rng, taken);
    taken.push_back(state_.agents[i]);
  }
  for (int k = 0; k < config_.num_prey; ++k) {
    state_.prey.push_back(random_free_cell(rng, taken));
    taken.push_back(state_.prey.back());
  }
  state_.prey_alive.assign(state_.prey.size(), 1);
}

void PredatorPreyEnv::apply(const JointAction& joint, StepResult& result) {
  for (std::size_t i = 0; i < kNumAgents; ++i) state_.agents[i] = blocked_move(state_.agents[i], joint.per_agent[i]);

  constexpr std::array<Action, 4> kMoves{Action::kUp, Action::kRight, Action::kDown, Action::kLeft};
  for (std::size_t k = 0; k < state_.prey.size(); ++k) {
    if (!state_.prey_alive[k]) continue;
    std::vector<GridPos> options;
    for (Action a : kMoves) {
      const GridPos next = displaced(state_.prey[k], a);
      if (in_bounds(next) && !is_barrier(next)) options.push_back(next);
    }
    if (options.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    state_.prey[k] = options[pick(rng_)];
  }

  bool any_alive = false;
  for (std::size_t k = 0; k < state_.prey.size(); ++k) {
    if (!state_.prey_alive[k]) continue;
    bool captured = false;
    for (std::size_t i = 0; i < kNumAgents; ++i) {
      if (state_.agents[i] != state_.prey[k]) continue;
      captured = true;
      if (!config_.cooperative) result.rewards[i] += config_.reward;
    }
    if (captured) {
      state_.prey_alive[k] = 0;
      if (config_.cooperative) {
        result.rewards[0] += config_.reward;
        result.rewards[1] += config_.reward;
      }
    } else {
      any_alive = true;
    }
  }
  if (!any_alive) state_.terminal = true;
}

void PredatorPreyEnv::encode(int agent, Observation& out) const {
  const auto& s = state_.agents[static_cast<std::size_t>(agent)];
  const auto& o = state_.agents[static_cast<std::size_t>(1 - agent)];
  out = {coord_row(s.row), coord_col(s.col), coord_row(o.row), coord_col(o.col)};
  for (std::size_t k = 0; k < state_.prey.size(); ++k) {
    if (state_.prey_alive[k]) {
      out.push_back(coord_row(state_.prey[k].row));
      out.push_back(coord_col(state_.prey[k].col));
      out.push_back(1.0);
    } else {
      out.push_back(kAbsent);
      out.push_back(kAbsent);
      out.push_back(0.0);
    }
  }
}

std::string PredatorPreyEnv::cell_token(GridPos p) const {
  if (is_barrier(p)) return "# ";
  for (std::size_t k = 0; k < state_.prey.size(); ++k) {
    if (state_.prey_alive[k] && state_.prey[k] == p) return "p ";
  }
  return ". ";
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  switch (config.kind) {
    case EnvKind::kSync: return std::make_unique<SyncEnv>(config);
    case EnvKind::kWarehouse: return std::make_unique<WarehouseEnv>(config);
    case EnvKind::kPredatorPrey: return std::make_unique<PredatorPreyEnv>(config);
  }
  throw ConfigError("environment.name: unknown environment");
}

}  // namespace mdqn

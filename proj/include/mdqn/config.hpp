#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "mdqn/agents.hpp"
#include "mdqn/envs.hpp"
#include "mdqn/game_solver.hpp"
#include "mdqn/qnet.hpp"
#include "mdqn/replay.hpp"

namespace mdqn {

// Everything a training run needs. Defaults follow the reference hyperparameter table; fields the
// table leaves open carry the values documented in the README.
struct RunConfig {
  EnvConfig env = default_env_config(EnvKind::kSync);
  AlgorithmKind algorithm = AlgorithmKind::kIdqn;
  NashRules nash;
  TopologyConfig topology;
  // Architecture and widths; input/output dimensions and split indices are filled from the
  // environment when networks are built.
  NetworkSpec network;

  int batch_size = 128;
  std::size_t replay_capacity = 1'000'000;
  double learning_rate = 0.01;
  double learning_rate_decay = 1e-4;
  double initial_exploration = 1.0;
  double final_exploration = 0.1;
  double exploration_decay_factor = 0.75;
  std::int64_t target_dissemination_freq = 10'000;
  double discount = 0.95;
  int max_training_episode_length = 100;
  int max_test_episode_length = 100;
  int evaluation_episodes = 1'000;
  std::size_t burn_in = 50'000;
  int model_update_frequency = 10;
  std::int64_t evaluation_frequency = 10'000;
  double evaluation_epsilon = 0.05;
  double convergence_fraction = 0.7;
  int convergence_window = 5;
  std::int64_t total_updates = 500'000;
  std::uint64_t seed = 0;

  ExplorationSchedule exploration() const {
    return {initial_exploration, final_exploration, exploration_decay_factor, total_updates};
  }
  AdamConfig adam() const {
    AdamConfig a;
    a.learning_rate = learning_rate;
    a.decay = learning_rate_decay;
    return a;
  }
  // Network spec with dimensions resolved for the configured environment and algorithm.
  NetworkSpec resolved_network(const Environment& env) const;
};

// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace mdqn

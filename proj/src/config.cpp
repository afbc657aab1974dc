#include "mdqn/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + key + ": unknown configuration key");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where = "") {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + key + ": wrong value type");
  }
}

AlgorithmKind algorithm_from_config(const std::string& name, bool nash_public) {
  if (name == "idqn") return AlgorithmKind::kIdqn;
  if (name == "set_controller") return AlgorithmKind::kSetController;
  if (name == "friend") return AlgorithmKind::kFriendQ;
  if (name == "nash_q") return nash_public ? AlgorithmKind::kNashQPublic : AlgorithmKind::kNashQPrivate;
  throw ConfigError("algorithm: expected idqn | set_controller | friend | nash_q, got '" + name + "'");
}

std::string algorithm_config_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kNashQPublic:
    case AlgorithmKind::kNashQPrivate:
      return "nash_q";
    default:
      return std::string(algorithm_name(kind));
  }
}

}  // namespace

NetworkSpec RunConfig::resolved_network(const Environment& env) const {
  NetworkSpec spec = network;
  spec.input_dim = env.observation_dim();
  spec.output_dim = network_output_dim(algorithm, env.num_actions());
  if (spec.arch == Architecture::kSplit) {
    const SplitLayout layout = env.split_layout();
    spec.self_indices = layout.self_indices;
    spec.other_indices = layout.other_indices;
  }
  return spec;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string(field) + ": " + what);
  };
  require(c.batch_size >= 1, "batch_size", "must be positive");
  require(c.replay_capacity >= 1, "experience_replay_buffer_size", "must be positive");
  require(c.burn_in <= c.replay_capacity, "experience_replay_burn_in", "must not exceed the buffer size");
  require(c.learning_rate > 0.0, "learning_rate", "must be positive");
  require(c.learning_rate_decay >= 0.0, "learning_rate_decay", "must be non-negative");
  require(c.initial_exploration >= 0.0 && c.initial_exploration <= 1.0, "initial_exploration", "must lie in [0, 1]");
  require(c.final_exploration >= 0.0 && c.final_exploration <= c.initial_exploration, "final_exploration",
          "must lie in [0, initial_exploration]");
  require(c.exploration_decay_factor >= 0.0 && c.exploration_decay_factor <= 1.0, "exploration_decay_factor",
          "must lie in [0, 1]");
  require(c.target_dissemination_freq >= 1, "target_dissemination_freq", "must be positive");
  require(c.discount >= 0.0 && c.discount < 1.0, "discount_factor", "must lie in [0, 1)");
  require(c.max_training_episode_length >= 1, "max_training_episode_length", "must be positive");
  require(c.max_test_episode_length >= 1, "max_test_episode_length", "must be positive");
  require(c.evaluation_episodes >= 1, "number_of_episodes_for_evaluation", "must be positive");
  require(c.model_update_frequency >= 1, "model_update_frequency", "must be positive");
  require(c.evaluation_frequency >= 1, "evaluation_frequency", "must be positive");
  require(c.evaluation_epsilon >= 0.0 && c.evaluation_epsilon <= 1.0, "evaluation_epsilon", "must lie in [0, 1]");
  require(c.convergence_fraction > 0.0, "convergence_fraction", "must be positive");
  require(c.convergence_window >= 1, "convergence_window", "must be positive");
  require(c.total_updates >= 0, "total_updates", "must be non-negative");
  require(c.nash.tolerance >= 0.0, "nash_q.tolerance", "must be non-negative");
  if (c.algorithm == AlgorithmKind::kSetController && c.topology.variant == Topology::kAsyncSingle) {
    throw ConfigError("topology: the set controller already trains a single network; use 'parallel'");
  }
  // Constructing the environment validates the board.
  auto env = make_environment(c.env);
  validate(c.resolved_network(*env));
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"environment", "algorithm", "nash_q", "topology", "single_writer", "network", "batch_size",
                  "experience_replay_buffer_size", "learning_rate", "reward_constant", "learning_rate_decay",
                  "initial_exploration", "final_exploration", "exploration_decay_factor",
                  "target_dissemination_freq", "discount_factor", "max_training_episode_length",
                  "max_test_episode_length", "number_of_episodes_for_evaluation", "experience_replay_burn_in",
                  "model_update_frequency", "evaluation_frequency", "evaluation_epsilon", "convergence_fraction",
                  "convergence_window", "total_updates", "seed"},
                 "");
  RunConfig c;

  if (j.contains("environment")) {
    const json& e = j.at("environment");
    if (!e.is_object()) throw ConfigError("environment: must be an object");
    reject_unknown(e, {"name", "size", "height", "width", "boxes", "num_prey", "barriers", "cooperative", "normalize"},
                   "environment.");
    std::string name = "sync";
    read(e, "name", name, "environment.");
    c.env = default_env_config(env_kind_from_name(name));
    int size = 0;
    read(e, "size", size, "environment.");
    if (size > 0) c.env.height = c.env.width = size;
    read(e, "height", c.env.height, "environment.");
    read(e, "width", c.env.width, "environment.");
    read(e, "boxes", c.env.boxes, "environment.");
    read(e, "num_prey", c.env.num_prey, "environment.");
    read(e, "cooperative", c.env.cooperative, "environment.");
    read(e, "normalize", c.env.normalize, "environment.");
    if (e.contains("barriers")) {
      std::vector<std::array<int, 2>> cells;
      read(e, "barriers", cells, "environment.");
      for (const auto& rc : cells) c.env.barriers.push_back({rc[0], rc[1]});
    }
  }
  read(j, "reward_constant", c.env.reward);

  std::string algorithm = "idqn";
  read(j, "algorithm", algorithm);
  bool nash_public = true;
  if (j.contains("nash_q")) {
    const json& n = j.at("nash_q");
    reject_unknown(n, {"public", "tie_break", "no_nash", "tolerance"}, "nash_q.");
    read(n, "public", nash_public, "nash_q.");
    std::string tie = "max_sum";
    std::string none = "best_sum";
    read(n, "tie_break", tie, "nash_q.");
    read(n, "no_nash", none, "nash_q.");
    c.nash.tie_break = tie_break_from_name(tie);
    c.nash.no_nash = no_nash_from_name(none);
    read(n, "tolerance", c.nash.tolerance, "nash_q.");
  }
  c.algorithm = algorithm_from_config(algorithm, nash_public);

  std::string topology = "parallel";
  read(j, "topology", topology);
  c.topology.variant = topology_from_name(topology);
  read(j, "single_writer", c.topology.single_writer);

  if (j.contains("network")) {
    const json& n = j.at("network");
    reject_unknown(n, {"architecture", "hidden", "self_width", "other_width", "joint_width"}, "network.");
    std::string arch = "single";
    read(n, "architecture", arch, "network.");
    c.network.arch = architecture_from_name(arch);
    read(n, "hidden", c.network.hidden, "network.");
    read(n, "self_width", c.network.self_width, "network.");
    read(n, "other_width", c.network.other_width, "network.");
    read(n, "joint_width", c.network.joint_width, "network.");
  }

  read(j, "batch_size", c.batch_size);
  read(j, "experience_replay_buffer_size", c.replay_capacity);
  read(j, "learning_rate", c.learning_rate);
  read(j, "learning_rate_decay", c.learning_rate_decay);
  read(j, "initial_exploration", c.initial_exploration);
  read(j, "final_exploration", c.final_exploration);
  read(j, "exploration_decay_factor", c.exploration_decay_factor);
  read(j, "target_dissemination_freq", c.target_dissemination_freq);
  read(j, "discount_factor", c.discount);
  read(j, "max_training_episode_length", c.max_training_episode_length);
  read(j, "max_test_episode_length", c.max_test_episode_length);
  read(j, "number_of_episodes_for_evaluation", c.evaluation_episodes);
  read(j, "experience_replay_burn_in", c.burn_in);
  read(j, "model_update_frequency", c.model_update_frequency);
  read(j, "evaluation_frequency", c.evaluation_frequency);
  read(j, "evaluation_epsilon", c.evaluation_epsilon);
  read(j, "convergence_fraction", c.convergence_fraction);
  read(j, "convergence_window", c.convergence_window);
  read(j, "total_updates", c.total_updates);
  read(j, "seed", c.seed);
  c.topology.dissemination_freq = c.target_dissemination_freq;

  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  json env = {{"name", env_name(c.env.kind)},
              {"height", c.env.height},
              {"width", c.env.width},
              {"cooperative", c.env.cooperative},
              {"normalize", c.env.normalize}};
  if (c.env.kind == EnvKind::kWarehouse) env["boxes"] = c.env.boxes;
  if (c.env.kind == EnvKind::kPredatorPrey) {
    env["num_prey"] = c.env.num_prey;
    json barriers = json::array();
    for (const auto& b : c.env.barriers) barriers.push_back({b.row, b.col});
    env["barriers"] = barriers;
  }
  json network = {{"architecture", architecture_name(c.network.arch)}};
  if (c.network.arch == Architecture::kSingle) {
    network["hidden"] = c.network.hidden;
  } else {
    network["self_width"] = c.network.self_width;
    network["other_width"] = c.network.other_width;
    network["joint_width"] = c.network.joint_width;
  }
  return json{
      {"environment", env},
      {"algorithm", algorithm_config_name(c.algorithm)},
      {"nash_q",
       {{"public", c.algorithm != AlgorithmKind::kNashQPrivate},
        {"tie_break", tie_break_name(c.nash.tie_break)},
        {"no_nash", no_nash_name(c.nash.no_nash)},
        {"tolerance", c.nash.tolerance}}},
      {"topology", topology_name(c.topology.variant)},
      {"single_writer", c.topology.single_writer},
      {"network", network},
      {"batch_size", c.batch_size},
      {"experience_replay_buffer_size", c.replay_capacity},
      {"learning_rate", c.learning_rate},
      {"reward_constant", c.env.reward},
      {"learning_rate_decay", c.learning_rate_decay},
      {"initial_exploration", c.initial_exploration},
      {"final_exploration", c.final_exploration},
      {"exploration_decay_factor", c.exploration_decay_factor},
      {"target_dissemination_freq", c.target_dissemination_freq},
      {"discount_factor", c.discount},
      {"max_training_episode_length", c.max_training_episode_length},
      {"max_test_episode_length", c.max_test_episode_length},
      {"number_of_episodes_for_evaluation", c.evaluation_episodes},
      {"experience_replay_burn_in", c.burn_in},
      {"model_update_frequency", c.model_update_frequency},
      {"evaluation_frequency", c.evaluation_frequency},
      {"evaluation_epsilon", c.evaluation_epsilon},
      {"convergence_fraction", c.convergence_fraction},
      {"convergence_window", c.convergence_window},
      {"total_updates", c.total_updates},
      {"seed", c.seed},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace mdqn

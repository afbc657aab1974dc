#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "mdqn/game_solver.hpp"
#include "mdqn/grid.hpp"
#include "mdqn/qnet.hpp"

namespace mdqn {

enum class AlgorithmKind { kIdqn, kSetController, kFriendQ, kNashQPublic, kNashQPrivate };

std::string_view algorithm_name(AlgorithmKind kind);

// IDQN networks score an agent's own actions; every other kind scores the joint action space.
bool is_joint_space(AlgorithmKind kind);
int network_output_dim(AlgorithmKind kind, int num_actions);
// Networks trained per team: one for the set controller, one per agent otherwise.
int learner_count(AlgorithmKind kind);

// Which observation a network of this kind reads. IDQN agents see the board self-first; joint-space
// networks all read agent 0's frame so their outputs share the agent-0-major joint index.
int observation_frame(AlgorithmKind kind, int agent_id);

struct ExplorationSchedule {
  double epsilon_initial = 1.0;
  double epsilon_final = 0.1;
  // Fraction of total_updates over which epsilon falls linearly.
  double decay_fraction = 0.75;
  std::int64_t total_updates = 0;
};

double epsilon_at(const ExplorationSchedule& schedule, std::int64_t update_count);

// Future value term of the TD target for each column of `next_inputs`, read from `target_params`
// (one network per agent, or a single shared one).
Eigen::VectorXd bootstrap_values(AlgorithmKind kind, const Eigen::MatrixXd& next_inputs,
                                 std::span<const NetworkParams> target_params, int agent_id, const NashRules& rules);

// r + discount * bootstrap, or exactly r on terminal transitions.
double td_target(AlgorithmKind kind, double reward, bool terminal, std::span<const Observation> next_obs,
                 std::span<const NetworkParams> target_params, double discount, int agent_id, const NashRules& rules);

struct ActionChoice {
  JointAction joint;
  // Mean over the acting networks of Q at the chosen (joint) action. Only filled when requested.
  double q_value = 0.0;
};

// Epsilon-greedy per agent for IDQN; epsilon-joint (one draw for the whole vector) otherwise.
ActionChoice choose_action(AlgorithmKind kind, std::span<const Observation> obs, std::span<const NetworkParams> params,
                           double epsilon, std::mt19937_64& rng, const NashRules& rules, int num_actions,
                           bool want_q_value = false);

JointAction act(AlgorithmKind kind, std::span<const Observation> obs, std::span<const NetworkParams> params,
                double epsilon, std::mt19937_64& rng, const NashRules& rules, int num_actions);

}  // namespace mdqn

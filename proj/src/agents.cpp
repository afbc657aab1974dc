#include "mdqn/agents.hpp"

#include <cmath>
#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

namespace {

const NetworkParams& network_for(std::span<const NetworkParams> params, int agent_id) {
  if (params.empty()) throw UsageError("no network parameters supplied");
  if (agent_id < 0 || agent_id >= kNumAgents) throw UsageError("agent id must be 0 or 1");
  return params.size() == 1 ? params[0] : params[static_cast<std::size_t>(agent_id)];
}

int joint_side(int output_dim) {
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(output_dim))));
  if (n * n != output_dim) throw UsageError("joint-space network output is not a square action space");
  return n;
}

int argmax_index(const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return static_cast<int>(best);
}

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

std::string_view algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kIdqn: return "idqn";
    case AlgorithmKind::kSetController: return "set_controller";
    case AlgorithmKind::kFriendQ: return "friend";
    case AlgorithmKind::kNashQPublic: return "nash_q_public";
    case AlgorithmKind::kNashQPrivate: return "nash_q_private";
  }
  return "?";
}

bool is_joint_space(AlgorithmKind kind) { return kind != AlgorithmKind::kIdqn; }

int network_output_dim(AlgorithmKind kind, int num_actions) {
  return is_joint_space(kind) ? num_actions * num_actions : num_actions;
}

int learner_count(AlgorithmKind kind) { return kind == AlgorithmKind::kSetController ? 1 : kNumAgents; }

int observation_frame(AlgorithmKind kind, int agent_id) { return is_joint_space(kind) ? 0 : agent_id; }

double epsilon_at(const ExplorationSchedule& s, std::int64_t update_count) {
  if (update_count < 0) throw UsageError("epsilon_at: negative update count");
  const double window = s.decay_fraction * static_cast<double>(s.total_updates);
  const auto t = static_cast<double>(update_count);
  if (window <= 0.0 || t >= window) return s.epsilon_final;
  return s.epsilon_initial + (s.epsilon_final - s.epsilon_initial) * (t / window);
}

Eigen::VectorXd bootstrap_values(AlgorithmKind kind, const Eigen::MatrixXd& next_inputs,
                                 std::span<const NetworkParams> target_params, int agent_id, const NashRules& rules) {
  const NetworkParams& own = network_for(target_params, agent_id);
  const Eigen::MatrixXd q_own = forward_batch(own, next_inputs);
  switch (kind) {
    case AlgorithmKind::kIdqn:
    case AlgorithmKind::kSetController:
    case AlgorithmKind::kFriendQ:
      return q_own.colwise().maxCoeff().transpose();
    case AlgorithmKind::kNashQPublic:
    case AlgorithmKind::kNashQPrivate: {
      const int n = joint_side(own.output_dim());
      Eigen::MatrixXd q_other;
      if (kind == AlgorithmKind::kNashQPublic) {
        const NetworkParams& other = network_for(target_params, 1 - agent_id);
        if (other.output_dim() != own.output_dim()) throw UsageError("nash-q: agents' networks disagree on output size");
        q_other = forward_batch(other, next_inputs);
      }
      const Eigen::MatrixXd& q0 = (kind == AlgorithmKind::kNashQPrivate || agent_id == 0) ? q_own : q_other;
      const Eigen::MatrixXd& q1 = (kind == AlgorithmKind::kNashQPrivate || agent_id == 1) ? q_own : q_other;
      Eigen::VectorXd values(next_inputs.cols());
      for (Eigen::Index k = 0; k < next_inputs.cols(); ++k) {
        const Eigen::VectorXd c0 = q0.col(k);
        const Eigen::VectorXd c1 = q1.col(k);
        const Cell cell = nash_joint(build_payoffs(as_span(c0), as_span(c1), n, n), rules);
        values[k] = q_own(cell.row * n + cell.col, k);
      }
      return values;
    }
  }
  throw UsageError("unknown algorithm kind");
}

double td_target(AlgorithmKind kind, double reward, bool terminal, std::span<const Observation> next_obs,
                 std::span<const NetworkParams> target_params, double discount, int agent_id, const NashRules& rules) {
  if (discount < 0.0 || discount >= 1.0) throw UsageError("td_target: discount must lie in [0, 1)");
  if (terminal) return reward;
  const auto frame = static_cast<std::size_t>(observation_frame(kind, agent_id));
  if (frame >= next_obs.size()) throw UsageError("td_target: missing observation for agent frame");
  const Observation& obs = next_obs[frame];
  const Eigen::Map<const Eigen::MatrixXd> column(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  return reward + discount * bootstrap_values(kind, column, target_params, agent_id, rules)[0];
}

ActionChoice choose_action(AlgorithmKind kind, std::span<const Observation> obs, std::span<const NetworkParams> params,
                           double epsilon, std::mt19937_64& rng, const NashRules& rules, int num_actions,
                           bool want_q_value) {
  if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("act: epsilon must lie in [0, 1]");
  if (obs.size() < static_cast<std::size_t>(kNumAgents)) throw UsageError("act: one observation per agent required");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ActionChoice choice;

  if (kind == AlgorithmKind::kIdqn) {
    std::uniform_int_distribution<int> random_action(0, num_actions - 1);
    double q_sum = 0.0;
    for (int i = 0; i < kNumAgents; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const bool explore = unit(rng) < epsilon;
      int a = 0;
      if (explore) {
        a = random_action(rng);
        if (want_q_value) q_sum += forward(network_for(params, i), obs[idx])[a];
      } else {
        const Eigen::VectorXd q = forward(network_for(params, i), obs[idx]);
        if (q.size() != num_actions) throw UsageError("act: IDQN network must output one value per action");
        a = argmax_index(q);
        q_sum += q[a];
      }
      choice.joint.per_agent[idx] = action_from_index(a);
    }
    choice.q_value = want_q_value ? q_sum / kNumAgents : 0.0;
    return choice;
  }

  const int joint_dim = num_actions * num_actions;
  const Observation& frame = obs[0];
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<int> random_joint(0, joint_dim - 1);
    choice.joint = decode_joint(random_joint(rng), num_actions);
    if (want_q_value) {
      const int index = joint_index(choice.joint, num_actions);
      double q_sum = 0.0;
      const int nets = kind == AlgorithmKind::kSetController ? 1 : kNumAgents;
      for (int i = 0; i < nets; ++i) q_sum += forward(network_for(params, i), frame)[index];
      choice.q_value = q_sum / nets;
    }
    return choice;
  }

  if (kind == AlgorithmKind::kSetController) {
    const Eigen::VectorXd q = forward(params[0], frame);
    choice.joint = select_set_controller(as_span(q), num_actions);
    choice.q_value = q[joint_index(choice.joint, num_actions)];
    return choice;
  }

  const Eigen::VectorXd q0 = forward(network_for(params, 0), frame);
  const Eigen::VectorXd q1 = forward(network_for(params, 1), frame);
  if (q0.size() != joint_dim || q1.size() != joint_dim) throw UsageError("act: network does not cover the joint space");
  switch (kind) {
    case AlgorithmKind::kFriendQ:
      choice.joint.per_agent[0] = action_from_index(select_friend(as_span(q0), num_actions, 0));
      choice.joint.per_agent[1] = action_from_index(select_friend(as_span(q1), num_actions, 1));
      break;
    case AlgorithmKind::kNashQPublic: {
      const Cell cell = nash_joint(build_payoffs(as_span(q0), as_span(q1), num_actions, num_actions), rules);
      choice.joint = JointAction{{action_from_index(cell.row), action_from_index(cell.col)}};
      break;
    }
    case AlgorithmKind::kNashQPrivate:
      // Each agent stands in its own Q-values for the other agent's payoffs.
      choice.joint.per_agent[0] =
          action_from_index(select_nash_q(build_payoffs(as_span(q0), as_span(q0), num_actions, num_actions), rules, 0));
      choice.joint.per_agent[1] =
          action_from_index(select_nash_q(build_payoffs(as_span(q1), as_span(q1), num_actions, num_actions), rules, 1));
      break;
    default:
      break;
  }
  const int index = joint_index(choice.joint, num_actions);
  choice.q_value = 0.5 * (q0[index] + q1[index]);
  return choice;
}

JointAction act(AlgorithmKind kind, std::span<const Observation> obs, std::span<const NetworkParams> params,
                double epsilon, std::mt19937_64& rng, const NashRules& rules, int num_actions) {
  return choose_action(kind, obs, params, epsilon, rng, rules, num_actions).joint;
}

}  // namespace mdqn

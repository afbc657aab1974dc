#pragma once

#include <compare>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mdqn/grid.hpp"

namespace mdqn {

// Per-agent Q-values over the joint action space of one state, treated as bimatrix payoffs.
// Rows index agent 0's action, columns agent 1's.
struct PayoffMatrixPair {
  Eigen::MatrixXd payoff_1;
  Eigen::MatrixXd payoff_2;
};

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

// Pure equilibria, duplicate free, in lexicographic order.
using EquilibriumSet = std::vector<Cell>;

enum class TieBreak { kGreedy, kMaxSum };
enum class NoNashRule { kGreedy, kBestSum };

std::string_view tie_break_name(TieBreak t);
TieBreak tie_break_from_name(std::string_view name);
std::string_view no_nash_name(NoNashRule r);
NoNashRule no_nash_from_name(std::string_view name);

struct NashRules {
  TieBreak tie_break = TieBreak::kMaxSum;
  NoNashRule no_nash = NoNashRule::kBestSum;
  // Slack when comparing against a best-response maximum. Zero means exact comparison.
  double tolerance = 0.0;
};

// Reshapes two joint-space Q-vectors (agent-0-major) into payoff matrices.
PayoffMatrixPair build_payoffs(std::span<const double> q1, std::span<const double> q2, int rows, int cols);

EquilibriumSet pure_nash(const PayoffMatrixPair& pair, double tolerance = 0.0);

// The coordinate agent `agent_id` plays under the given rules. Agents decide independently: under
// the greedy tie-break each picks the equilibrium best for itself, so the combined cell may not be an
// equilibrium.
int select_nash_q(const PayoffMatrixPair& pair, const NashRules& rules, int agent_id);

// Both agents' independent selections combined into one cell.
Cell nash_joint(const PayoffMatrixPair& pair, const NashRules& rules);

// Agent `agent_id`'s coordinate of the argmax cell of its own joint-space Q-vector.
int select_friend(std::span<const double> q_self, int num_actions, int agent_id);

// Argmax over the joint space, lowest index on ties.
JointAction select_set_controller(std::span<const double> q_joint, int num_actions);

}  // namespace mdqn

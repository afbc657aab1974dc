#include "mdqn/game_solver.hpp"

#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

namespace {

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void check_agent(int agent_id) {
  if (agent_id != 0 && agent_id != 1) throw UsageError("agent id must be 0 or 1");
}

// Cell of `m` (row-major scan) holding the largest entry; first one on ties.
Cell argmax_cell(const Eigen::MatrixXd& m) {
  Cell best{0, 0};
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) > m(best.row, best.col)) best = {i, j};
    }
  }
  return best;
}

}  // namespace

std::string_view tie_break_name(TieBreak t) { return t == TieBreak::kGreedy ? "greedy" : "max_sum"; }

TieBreak tie_break_from_name(std::string_view name) {
  if (name == "greedy") return TieBreak::kGreedy;
  if (name == "max_sum") return TieBreak::kMaxSum;
  throw ConfigError("nash_q.tie_break: expected 'greedy' or 'max_sum', got '" + std::string(name) + "'");
}

std::string_view no_nash_name(NoNashRule r) { return r == NoNashRule::kGreedy ? "greedy" : "best_sum"; }

NoNashRule no_nash_from_name(std::string_view name) {
  if (name == "greedy") return NoNashRule::kGreedy;
  if (name == "best_sum") return NoNashRule::kBestSum;
  throw ConfigError("nash_q.no_nash: expected 'greedy' or 'best_sum', got '" + std::string(name) + "'");
}

PayoffMatrixPair build_payoffs(std::span<const double> q1, std::span<const double> q2, int rows, int cols) {
  const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (q1.size() != expected || q2.size() != expected) {
    throw UsageError("build_payoffs: q-vectors must have length " + std::to_string(expected));
  }
  PayoffMatrixPair pair{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const auto k = static_cast<std::size_t>(i * cols + j);
      pair.payoff_1(i, j) = q1[k];
      pair.payoff_2(i, j) = q2[k];
    }
  }
  return pair;
}

EquilibriumSet pure_nash(const PayoffMatrixPair& pair, double tolerance) {
  const auto& p1 = pair.payoff_1;
  const auto& p2 = pair.payoff_2;
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols()) throw UsageError("pure_nash: payoff shapes differ");
  // Agent 0 best-responds down each column, agent 1 along each row.
  const Eigen::RowVectorXd column_max = p1.colwise().maxCoeff();
  const Eigen::VectorXd row_max = p2.rowwise().maxCoeff();
  EquilibriumSet cells;
  for (int i = 0; i < p1.rows(); ++i) {
    for (int j = 0; j < p1.cols(); ++j) {
      if (p1(i, j) >= column_max[j] - tolerance && p2(i, j) >= row_max[i] - tolerance) cells.push_back({i, j});
    }
  }
  return cells;
}

int select_nash_q(const PayoffMatrixPair& pair, const NashRules& rules, int agent_id) {
  check_agent(agent_id);
  const auto& own = agent_id == 0 ? pair.payoff_1 : pair.payoff_2;
  const EquilibriumSet eq = pure_nash(pair, rules.tolerance);
  if (!eq.empty()) {
    Cell best = eq.front();
    auto score = [&](Cell c) {
      return rules.tie_break == TieBreak::kMaxSum ? pair.payoff_1(c.row, c.col) + pair.payoff_2(c.row, c.col)
                                                  : own(c.row, c.col);
    };
    for (const Cell& c : eq) {
      if (score(c) > score(best)) best = c;
    }
    return agent_id == 0 ? best.row : best.col;
  }
  if (rules.no_nash == NoNashRule::kGreedy) {
    const Cell best = argmax_cell(own);
    return agent_id == 0 ? best.row : best.col;
  }
  // Opponent actions equiprobable: average own payoff over them.
  if (agent_id == 0) {
    const Eigen::VectorXd means = own.rowwise().mean();
    return static_cast<int>(argmax_first({means.data(), static_cast<std::size_t>(means.size())}));
  }
  const Eigen::RowVectorXd means = own.colwise().mean();
  return static_cast<int>(argmax_first({means.data(), static_cast<std::size_t>(means.size())}));
}

Cell nash_joint(const PayoffMatrixPair& pair, const NashRules& rules) {
  return {select_nash_q(pair, rules, 0), select_nash_q(pair, rules, 1)};
}

int select_friend(std::span<const double> q_self, int num_actions, int agent_id) {
  check_agent(agent_id);
  if (q_self.size() != static_cast<std::size_t>(num_actions * num_actions)) {
    throw UsageError("select_friend: q-vector must cover the joint action space");
  }
  const int best = static_cast<int>(argmax_first(q_self));
  return agent_id == 0 ? best / num_actions : best % num_actions;
}

JointAction select_set_controller(std::span<const double> q_joint, int num_actions) {
  if (q_joint.size() != static_cast<std::size_t>(num_actions * num_actions)) {
    throw UsageError("select_set_controller: q-vector must cover the joint action space");
  }
  return decode_joint(static_cast<int>(argmax_first(q_joint)), num_actions);
}

}  // namespace mdqn

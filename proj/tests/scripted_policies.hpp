#pragma once

// Hand-written controllers used as oracles for evaluation tests.

#include <array>
#include <random>

#include "mdqn/agents.hpp"
#include "mdqn/envs.hpp"
#include "mdqn/harness.hpp"

namespace mdqn::testing {

// Step from `from` toward `to`: columns first, then rows.
inline Action toward(GridPos from, GridPos to, Action when_there) {
  if (from.col < to.col) return Action::kRight;
  if (from.col > to.col) return Action::kLeft;
  if (from.row < to.row) return Action::kDown;
  if (from.row > to.row) return Action::kUp;
  return when_there;
}

// Sync: agent 0 stages at (0,1), agent 1 at (H-1,W-2); once both are staged they step into the
// corners together. Neither agent can touch a goal while travelling (boards of width >= 3).
inline Policy sync_oracle() {
  return [](const Environment& env, const std::array<Observation, kNumAgents>&, std::mt19937_64&) {
    const int h = env.config().height;
    const int w = env.config().width;
    const GridPos stage0{0, 1};
    const GridPos stage1{h - 1, w - 2};
    const auto& a = env.state().agents;
    ActionChoice choice;
    if (a[0] == stage0 && a[1] == stage1) {
      choice.joint = JointAction{{Action::kLeft, Action::kRight}};
    } else {
      choice.joint = JointAction{{toward(a[0], stage0, Action::kStay), toward(a[1], stage1, Action::kStay)}};
    }
    return choice;
  };
}

// Warehouse: agent 0 serves the (0,0) shelf and agent 1 the opposite one. An empty-handed agent
// waits on its shelf by pushing into the wall; a carrying agent heads for the centre.
inline Policy warehouse_alternation() {
  return [](const Environment& env, const std::array<Observation, kNumAgents>&, std::mt19937_64&) {
    const auto& s = env.state();
    const GridPos center{env.config().height / 2, env.config().width / 2};
    const std::array<GridPos, kNumAgents> shelf{GridPos{0, 0}, GridPos{env.config().height - 1, env.config().width - 1}};
    const std::array<Action, kNumAgents> wait{Action::kUp, Action::kDown};
    ActionChoice choice;
    for (std::size_t i = 0; i < kNumAgents; ++i) {
      choice.joint.per_agent[i] = s.carrying[i] ? toward(s.agents[i], center, wait[i]) : toward(s.agents[i], shelf[i], wait[i]);
    }
    return choice;
  };
}

}  // namespace mdqn::testing

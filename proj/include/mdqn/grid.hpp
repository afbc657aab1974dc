#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mdqn {

inline constexpr int kNumAgents = 2;

struct GridPos {
  int row = 0;
  int col = 0;
  auto operator<=>(const GridPos&) const = default;
};

// Declaration order fixes the action index used by the networks.
enum class Action : std::uint8_t { kUp = 0, kRight = 1, kDown = 2, kLeft = 3, kStay = 4 };

inline constexpr int action_index(Action a) { return static_cast<int>(a); }
inline constexpr Action action_from_index(int i) { return static_cast<Action>(i); }
std::string_view action_name(Action a);

// Moves one cell in the direction of `a`; the caller clamps.
GridPos displaced(GridPos p, Action a);

struct JointAction {
  std::array<Action, kNumAgents> per_agent{Action::kUp, Action::kUp};
  bool operator==(const JointAction&) const = default;
};

// Flattened joint index, agent-0-major: a0 * num_actions + a1.
inline int joint_index(const JointAction& j, int num_actions) {
  return action_index(j.per_agent[0]) * num_actions + action_index(j.per_agent[1]);
}
inline JointAction decode_joint(int index, int num_actions) {
  return JointAction{{action_from_index(index / num_actions), action_from_index(index % num_actions)}};
}

using Observation = std::vector<double>;

}  // namespace mdqn

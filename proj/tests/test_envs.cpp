#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "mdqn/envs.hpp"
#include "mdqn/errors.hpp"

using namespace mdqn;

namespace {

EnvConfig raw(EnvKind kind) {
  EnvConfig c = default_env_config(kind);
  c.normalize = false;
  return c;
}

JointAction ja(Action a, Action b) { return JointAction{{a, b}}; }

JointAction random_joint(const Environment& env, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
  return ja(action_from_index(pick(rng)), action_from_index(pick(rng)));
}

int manhattan(GridPos a, GridPos b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

}  // namespace

TEST_CASE("sync reset avoids the goal corners and never stacks agents") {
  auto env = make_environment(default_env_config(EnvKind::kSync));
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    env->reset(seed);
    const auto& a = env->state().agents;
    CHECK(a[0] != a[1]);
    for (const auto& p : a) {
      CHECK(p != GridPos{0, 0});
      CHECK(p != GridPos{4, 4});
    }
  }
}

TEST_CASE("warehouse reset puts the box on one of the two shelves") {
  auto env = make_environment(default_env_config(EnvKind::kWarehouse));
  std::set<GridPos> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    env->reset(seed);
    REQUIRE(env->state().box.has_value());
    const GridPos box = *env->state().box;
    CHECK((box == GridPos{0, 0} || box == GridPos{6, 6}));
    seen.insert(box);
    for (const auto& p : env->state().agents) {
      CHECK(p != box);
      CHECK(p != GridPos{3, 3});
    }
  }
  CHECK(seen.size() == 2);
}

TEST_CASE("reset is a function of the seed") {
  for (auto kind : {EnvKind::kSync, EnvKind::kWarehouse, EnvKind::kPredatorPrey}) {
    auto env = make_environment(default_env_config(kind));
    const auto first = env->reset(42);
    env->reset(7);
    const auto again = env->reset(42);
    CHECK(first == again);
  }
}

TEST_CASE("boards too small for their entities are rejected") {
  EnvConfig c = default_env_config(EnvKind::kWarehouse);
  c.height = c.width = 2;
  CHECK_THROWS_AS(make_environment(c), ConfigError);

  c = default_env_config(EnvKind::kPredatorPrey);
  c.height = c.width = 2;
  c.num_prey = 3;
  CHECK_THROWS_AS(make_environment(c), ConfigError);

  c = default_env_config(EnvKind::kSync);
  c.height = 1;
  CHECK_THROWS_AS(make_environment(c), ConfigError);
}

TEST_CASE("sync: synchronised corner entry pays both agents and ends the episode") {
  auto env = make_environment(default_env_config(EnvKind::kSync));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{0, 1}, GridPos{4, 3}};
  env->set_state(s);
  const auto r = env->step(ja(Action::kLeft, Action::kRight));
  CHECK(env->state().agents[0] == GridPos{0, 0});
  CHECK(env->state().agents[1] == GridPos{4, 4});
  CHECK(r.rewards[0] == 100.0);
  CHECK(r.rewards[1] == 100.0);
  CHECK(r.terminal);
}

TEST_CASE("sync: a lone corner entry ends the episode unrewarded") {
  auto env = make_environment(default_env_config(EnvKind::kSync));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{0, 1}, GridPos{2, 2}};
  env->set_state(s);
  const auto r = env->step(ja(Action::kLeft, Action::kStay));
  CHECK(r.terminal);
  CHECK(r.rewards[0] == 0.0);
  CHECK(r.rewards[1] == 0.0);
  CHECK_THROWS_AS(env->step(ja(Action::kStay, Action::kStay)), UsageError);
}

TEST_CASE("sync: both agents on the same corner is not a synchronisation") {
  auto env = make_environment(default_env_config(EnvKind::kSync));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{0, 1}, GridPos{1, 0}};
  env->set_state(s);
  const auto r = env->step(ja(Action::kLeft, Action::kUp));
  CHECK(r.terminal);
  CHECK(r.rewards[0] == 0.0);
}

TEST_CASE("sync observations are self first") {
  auto env = make_environment(raw(EnvKind::kSync));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{1, 2}, GridPos{3, 4}};
  env->set_state(s);
  CHECK(env->observe(0) == Observation{1, 2, 3, 4});
  CHECK(env->observe(1) == Observation{3, 4, 1, 2});

  auto norm = make_environment(default_env_config(EnvKind::kSync));
  norm->reset(0);
  norm->set_state(s);
  CHECK(norm->observe(0) == Observation{0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("warehouse: moves clamp at the border and Stay is illegal") {
  auto env = make_environment(default_env_config(EnvKind::kWarehouse));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{0, 3}, GridPos{5, 5}};
  s.box = GridPos{6, 6};
  env->set_state(s);
  env->step(ja(Action::kUp, Action::kLeft));
  CHECK(env->state().agents[0] == GridPos{0, 3});
  CHECK(env->state().agents[1] == GridPos{5, 4});
  CHECK_THROWS_AS(env->step(ja(Action::kStay, Action::kUp)), UsageError);
}

TEST_CASE("warehouse: carrying agent observation") {
  auto env = make_environment(raw(EnvKind::kWarehouse));
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{2, 1}, GridPos{5, 4}};
  s.carrying = {true, false};
  s.box = GridPos{0, 0};
  env->set_state(s);
  CHECK(env->observe(0) == Observation{2, 1, 1, 5, 4, 0, 0, 0});
  CHECK(env->observe(1) == Observation{5, 4, 0, 2, 1, 1, 0, 0});
  s.box.reset();
  env->set_state(s);
  CHECK(env->observe(0) == Observation{2, 1, 1, 5, 4, 0, kAbsent, kAbsent});
}

TEST_CASE("warehouse: delivery pays per the reward mode and respawns opposite") {
  for (bool cooperative : {true, false}) {
    EnvConfig c = default_env_config(EnvKind::kWarehouse);
    c.cooperative = cooperative;
    auto env = make_environment(c);
    env->reset(0);
    EnvState s = env->state();
    s.agents = {GridPos{6, 5}, GridPos{3, 2}};
    s.carrying = {false, true};
    s.box.reset();
    s.last_box_corner = GridPos{0, 0};
    env->set_state(s);
    const auto r = env->step(ja(Action::kRight, Action::kRight));
    CHECK(r.rewards[1] == 10.0);
    CHECK(r.rewards[0] == (cooperative ? 10.0 : 0.0));
    CHECK_FALSE(env->state().carrying[1]);
    CHECK(env->state().boxes_delivered == 1);
    // The new box lands on the (6,6) shelf; agent 0 walked onto it and picks it up.
    CHECK(env->state().carrying[0]);
    CHECK_FALSE(env->state().box.has_value());
    CHECK_FALSE(r.terminal);
  }
}

TEST_CASE("warehouse: the episode ends once every box is delivered") {
  EnvConfig c = default_env_config(EnvKind::kWarehouse);
  c.boxes = 1;
  auto env = make_environment(c);
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{3, 2}, GridPos{0, 6}};
  s.carrying = {true, false};
  s.box.reset();
  env->set_state(s);
  const auto r = env->step(ja(Action::kRight, Action::kLeft));
  CHECK(r.terminal);
  CHECK(r.rewards[0] == 10.0);
}

TEST_CASE("predator prey: a cornered prey is captured") {
  EnvConfig c = default_env_config(EnvKind::kPredatorPrey);
  c.height = c.width = 2;
  c.num_prey = 1;
  c.barriers = {GridPos{1, 1}};
  auto env = make_environment(c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env->reset(seed);
    EnvState s = env->state();
    s.agents = {GridPos{0, 1}, GridPos{1, 0}};
    s.prey = {GridPos{0, 0}};
    s.prey_alive = {1};
    env->set_state(s);
    // Both predators bump a wall; the prey has to step onto one of them.
    const auto r = env->step(ja(Action::kUp, Action::kLeft));
    CHECK(r.terminal);
    CHECK(r.rewards[0] == 10.0);
    CHECK(r.rewards[1] == 10.0);
    CHECK(env->observe(0) == Observation{0, 1, 1, 0, kAbsent, kAbsent, 0});
  }
}

TEST_CASE("predator prey: barriers block predators") {
  EnvConfig c = raw(EnvKind::kPredatorPrey);
  c.barriers = {GridPos{2, 2}};
  auto env = make_environment(c);
  env->reset(3);
  EnvState s = env->state();
  s.agents = {GridPos{2, 1}, GridPos{0, 0}};
  s.prey = {GridPos{4, 4}, GridPos{4, 0}};
  s.prey_alive = {1, 1};
  env->set_state(s);
  env->step(ja(Action::kRight, Action::kDown));
  CHECK(env->state().agents[0] == GridPos{2, 1});
  CHECK(env->state().agents[1] == GridPos{1, 0});
}

TEST_CASE("episodes are truncated at the step cap") {
  EnvConfig c = default_env_config(EnvKind::kWarehouse);
  c.max_steps = 7;
  auto env = make_environment(c);
  env->reset(0);
  EnvState s = env->state();
  s.agents = {GridPos{1, 1}, GridPos{5, 5}};
  env->set_state(s);
  int steps = 0;
  bool terminal = false;
  while (!terminal) {
    // Shuffle left and right in place, away from shelves and centre.
    terminal = env->step(steps % 2 ? ja(Action::kLeft, Action::kLeft) : ja(Action::kRight, Action::kRight)).terminal;
    ++steps;
  }
  CHECK(steps == 7);
}

TEST_CASE("render draws agents and features") {
  auto env = make_environment(default_env_config(EnvKind::kWarehouse));
  env->reset(1);
  const std::string board = env->render();
  CHECK(board.find("A0") != std::string::npos);
  CHECK(board.find("A1") != std::string::npos);
  CHECK(board.find("B ") != std::string::npos);
  CHECK(board.find("C ") != std::string::npos);
}

TEST_CASE("property: random rollouts respect movement, reward and bookkeeping rules") {
  std::mt19937_64 rng(99);
  for (auto kind : {EnvKind::kSync, EnvKind::kWarehouse, EnvKind::kPredatorPrey}) {
    for (bool cooperative : {true, false}) {
      EnvConfig c = default_env_config(kind);
      c.cooperative = cooperative;
      if (kind == EnvKind::kPredatorPrey) c.barriers = {GridPos{2, 2}};
      auto env = make_environment(c);
      for (std::uint64_t episode = 0; episode < 200; ++episode) {
        env->reset(episode);
        int delivered = env->state().boxes_delivered;
        std::optional<GridPos> corner;
        if (kind == EnvKind::kWarehouse) corner = env->state().box;
        while (!env->terminal()) {
          const auto before = env->state();
          const auto r = env->step(random_joint(*env, rng));
          const auto& after = env->state();
          for (std::size_t i = 0; i < kNumAgents; ++i) {
            CHECK(manhattan(before.agents[i], after.agents[i]) <= 1);
            CHECK(env->in_bounds(after.agents[i]));
          }
          if (cooperative) CHECK(r.rewards[0] == r.rewards[1]);
          if (kind == EnvKind::kSync) {
            CHECK((r.rewards[0] == 0.0 || r.rewards[0] == 100.0));
            if (r.rewards[0] > 0.0) {
              const std::set<GridPos> at{after.agents[0], after.agents[1]};
              CHECK(at == std::set<GridPos>{GridPos{0, 0}, GridPos{4, 4}});
            }
          }
          if (kind == EnvKind::kWarehouse) {
            CHECK(after.boxes_delivered >= delivered);
            if (after.box && corner && after.box != corner) {
              // Consecutive boxes alternate shelves.
              CHECK(*after.box == GridPos{6 - corner->row, 6 - corner->col});
            }
            if (after.box) corner = after.box;
            delivered = after.boxes_delivered;
          }
          if (kind == EnvKind::kPredatorPrey) {
            for (const auto& p : after.agents) CHECK(p != GridPos{2, 2});
          }
        }
        CHECK(env->state().step_count <= 100);
      }
    }
  }
}

TEST_CASE("property: same seed and same actions replay identically") {
  for (auto kind : {EnvKind::kSync, EnvKind::kWarehouse, EnvKind::kPredatorPrey}) {
    auto a = make_environment(default_env_config(kind));
    auto b = make_environment(default_env_config(kind));
    std::mt19937_64 rng_a(5);
    std::mt19937_64 rng_b(5);
    CHECK(a->reset(11) == b->reset(11));
    while (!a->terminal()) {
      const auto ra = a->step(random_joint(*a, rng_a));
      const auto rb = b->step(random_joint(*b, rng_b));
      CHECK(ra.next_obs == rb.next_obs);
      CHECK(ra.rewards == rb.rewards);
      CHECK(ra.terminal == rb.terminal);
    }
  }
}

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mdqn/grid.hpp"
#include "mdqn/qnet.hpp"

namespace mdqn {

struct Transition {
  Observation obs;
  int action = 0;  // own action index (IDQN) or joint index
  double reward = 0.0;
  Observation next_obs;
  bool terminal = false;
};

// Column-per-sample view of a drawn minibatch.
struct SampledBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd next_obs;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> terminals;
};

// Fixed-capacity FIFO ring of transitions with a burn-in gate on sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t burn_in, int obs_dim);

  void push(const Transition& t);
  void push(std::span<const double> obs, int action, double reward, std::span<const double> next_obs, bool terminal);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t burn_in() const { return burn_in_; }
  std::uint64_t total_pushed() const { return pushed_; }
  int obs_dim() const { return obs_dim_; }
  bool ready() const { return size_ >= burn_in_ && size_ > 0; }

  // i = 0 is the oldest stored transition.
  Transition at(std::size_t i) const;

  // Uniform draws with replacement. Throws SamplingGated before burn-in.
  std::vector<Transition> sample(std::size_t batch_size, std::mt19937_64& rng) const;
  void sample_batch(std::size_t batch_size, std::mt19937_64& rng, SampledBatch& out) const;

 private:
  std::vector<std::size_t> draw_slots(std::size_t batch_size, std::mt19937_64& rng) const;
  Transition load(std::size_t slot) const;

  std::size_t capacity_;
  std::size_t burn_in_;
  int obs_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // next slot to write
  std::uint64_t pushed_ = 0;
  std::vector<double> obs_;
  std::vector<double> next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> terminals_;
};

enum class Topology { kParallel, kAsyncSingle };

std::string_view topology_name(Topology t);
Topology topology_from_name(std::string_view name);

struct TopologyConfig {
  Topology variant = Topology::kParallel;
  std::int64_t dissemination_freq = 10000;
  // AsyncSingle only: store one agent's transition per step instead of both.
  bool single_writer = false;
};

// AsyncSingle: refreshes every agent snapshot from the learner when update_count is a multiple of
// the dissemination frequency. Returns whether a refresh happened.
bool disseminate(const TopologyConfig& topology, const NetworkParams& learner, std::int64_t update_count,
                 std::span<NetworkParams> agent_snapshots);

}  // namespace mdqn

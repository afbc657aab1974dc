#include "mdqn/replay.hpp"

#include <algorithm>
#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t burn_in, int obs_dim)
    : capacity_(capacity), burn_in_(burn_in), obs_dim_(obs_dim) {
  if (capacity_ == 0) throw ConfigError("experience_replay_buffer_size: must be positive");
  if (obs_dim_ < 1) throw ConfigError("replay: observation dimension must be positive");
}

void ReplayBuffer::push(const Transition& t) { push(t.obs, t.action, t.reward, t.next_obs, t.terminal); }

void ReplayBuffer::push(std::span<const double> obs, int action, double reward, std::span<const double> next_obs,
                        bool terminal) {
  const auto dim = static_cast<std::size_t>(obs_dim_);
  if (obs.size() != dim || next_obs.size() != dim) throw UsageError("replay push: observation has the wrong length");
  if (size_ < capacity_ && head_ == size_) {
    // Still filling: grow storage lazily.
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    actions_.push_back(action);
    rewards_.push_back(reward);
    terminals_.push_back(terminal ? 1 : 0);
  } else {
    std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(head_ * dim));
    std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(head_ * dim));
    actions_[head_] = action;
    rewards_[head_] = reward;
    terminals_[head_] = terminal ? 1 : 0;
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++pushed_;
}

Transition ReplayBuffer::load(std::size_t slot) const {
  const auto dim = static_cast<std::size_t>(obs_dim_);
  const auto begin = static_cast<std::ptrdiff_t>(slot * dim);
  const auto end = begin + static_cast<std::ptrdiff_t>(dim);
  return Transition{Observation(obs_.begin() + begin, obs_.begin() + end), actions_[slot], rewards_[slot],
                    Observation(next_obs_.begin() + begin, next_obs_.begin() + end), terminals_[slot] != 0};
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay at(): index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return load((oldest + i) % capacity_);
}

std::vector<std::size_t> ReplayBuffer::draw_slots(std::size_t batch_size, std::mt19937_64& rng) const {
  if (!ready()) {
    throw SamplingGated("replay sample: buffer holds " + std::to_string(size_) + " transitions, burn-in is " +
                        std::to_string(burn_in_));
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> slots(batch_size);
  for (auto& s : slots) s = pick(rng);
  return slots;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (std::size_t slot : draw_slots(batch_size, rng)) out.push_back(load(slot));
  return out;
}

void ReplayBuffer::sample_batch(std::size_t batch_size, std::mt19937_64& rng, SampledBatch& out) const {
  const auto slots = draw_slots(batch_size, rng);
  const auto n = static_cast<Eigen::Index>(batch_size);
  out.obs.resize(obs_dim_, n);
  out.next_obs.resize(obs_dim_, n);
  out.actions.resize(batch_size);
  out.rewards.resize(n);
  out.terminals.resize(batch_size);
  const auto dim = static_cast<std::size_t>(obs_dim_);
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t s = slots[k];
    const auto col = static_cast<Eigen::Index>(k);
    out.obs.col(col) = Eigen::Map<const Eigen::VectorXd>(obs_.data() + s * dim, obs_dim_);
    out.next_obs.col(col) = Eigen::Map<const Eigen::VectorXd>(next_obs_.data() + s * dim, obs_dim_);
    out.actions[k] = actions_[s];
    out.rewards[col] = rewards_[s];
    out.terminals[k] = terminals_[s];
  }
}

std::string_view topology_name(Topology t) { return t == Topology::kParallel ? "parallel" : "async_single"; }

Topology topology_from_name(std::string_view name) {
  if (name == "parallel") return Topology::kParallel;
  if (name == "async_single") return Topology::kAsyncSingle;
  throw ConfigError("topology: expected 'parallel' or 'async_single', got '" + std::string(name) + "'");
}

bool disseminate(const TopologyConfig& topology, const NetworkParams& learner, std::int64_t update_count,
                 std::span<NetworkParams> agent_snapshots) {
  if (topology.variant != Topology::kAsyncSingle) throw UsageError("disseminate: only defined for async_single");
  if (topology.dissemination_freq <= 0 || update_count % topology.dissemination_freq != 0) return false;
  for (auto& snapshot : agent_snapshots) snapshot = snapshot_params(learner);
  return true;
}

}  // namespace mdqn

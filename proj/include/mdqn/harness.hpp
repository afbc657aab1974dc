#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "mdqn/agents.hpp"
#include "mdqn/config.hpp"
#include "mdqn/envs.hpp"
#include "mdqn/qnet.hpp"
#include "mdqn/replay.hpp"

namespace mdqn {

struct EvalReport {
  std::int64_t updates = 0;
  int episodes = 0;
  // Episode return averaged over the two agents; identical to either agent's return when rewards
  // are shared.
  double mean_reward = 0.0;
  double reward_sd = 0.0;
  double mean_steps = 0.0;
  // Mean over evaluation steps of the Q-value of the action actually taken.
  double mean_max_q = 0.0;
  std::optional<double> deliveries_per_episode;  // warehouse only
  // Every episode had equal per-agent returns.
  bool returns_matched = true;
};

// Maps the live environment and both agents' observations to an action choice.
using Policy = std::function<ActionChoice(const Environment& env, const std::array<Observation, kNumAgents>& obs,
                                          std::mt19937_64& rng)>;

// Rolls out `episodes` random-restart episodes of at most max_test_episode_length steps. No learning.
EvalReport evaluate_policy(const RunConfig& config, const Policy& policy, int episodes, std::uint64_t seed,
                           std::int64_t updates = 0);

// Network-driven evaluation: the configured algorithm acts with evaluation_epsilon exploration.
EvalReport evaluate(const RunConfig& config, std::span<const NetworkParams> params, int episodes, std::uint64_t seed,
                    std::int64_t updates = 0);

// Update count at the end of the first window of `window` consecutive evaluations whose mean reward
// exceeds `threshold`.
std::optional<std::int64_t> convergence_update(std::span<const EvalReport> reports, double threshold, int window);

std::string csv_header(bool with_deliveries);
std::string csv_row(const EvalReport& report, bool with_deliveries);

// Writes evaluations.csv and summary.json under `dir` (created if needed).
void emit_results(const RunConfig& config, std::span<const EvalReport> reports, const std::filesystem::path& dir);

nlohmann::json summary_json(const RunConfig& config, std::span<const EvalReport> reports);

// Run configuration plus trained networks.
struct Checkpoint {
  RunConfig config;
  std::int64_t updates = 0;
  std::vector<NetworkParams> networks;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainingResult {
  std::vector<EvalReport> reports;
  std::vector<NetworkParams> networks;
  std::int64_t updates = 0;
  std::int64_t env_steps = 0;
};

// Single-loop trainer. Agents act, transitions go to the replay buffers, and every
// model_update_frequency environment steps past burn-in each learner takes one minibatch step.
class Trainer {
 public:
  explicit Trainer(RunConfig config);

  const RunConfig& config() const { return config_; }
  const Environment& environment() const { return *env_; }

  // One environment step, plus an update (and an evaluation) when due. Returns true when an update
  // was performed.
  bool env_step();
  // One gradient step on every learner; requires every buffer past burn-in.
  void update();
  EvalReport evaluate_now() const;

  // Runs to total_updates, evaluating at update 0 and every evaluation_frequency updates. The
  // callback sees each report as it is produced; returning false stops training early.
  TrainingResult run(const std::function<bool(const EvalReport&)>& on_report = {});

  std::int64_t updates() const { return updates_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::span<const NetworkParams> learners() const { return online_; }
  std::span<const NetworkParams> targets() const { return target_; }
  // Parameters the agents act with: the learners (parallel) or the disseminated snapshots.
  std::span<const NetworkParams> acting() const;
  std::size_t buffer_count() const { return buffers_.size(); }
  const ReplayBuffer& buffer(std::size_t i) const { return buffers_.at(i); }
  ReplayBuffer& buffer(std::size_t i) { return buffers_.at(i); }

  // Minibatch loss and gradient of one learner on a given batch, with targets from the target networks.
  LossAndGradient learner_gradient(std::size_t learner, const SampledBatch& batch) const;

 private:
  void store(const std::array<Observation, kNumAgents>& obs, const JointAction& joint, const StepResult& step);
  std::uint64_t next_episode_seed() { return episode_seed_rng_(); }

  RunConfig config_;
  std::unique_ptr<Environment> env_;
  int num_actions_ = 0;
  std::array<Observation, kNumAgents> obs_;
  std::vector<NetworkParams> online_;
  std::vector<NetworkParams> target_;
  std::vector<NetworkParams> snapshots_;
  std::vector<AdamState> adam_;
  std::vector<ReplayBuffer> buffers_;
  std::mt19937_64 act_rng_;
  std::mt19937_64 sample_rng_;
  std::mt19937_64 episode_seed_rng_;
  std::uint64_t eval_seed_ = 0;
  std::int64_t updates_ = 0;
  std::int64_t env_steps_ = 0;
  SampledBatch scratch_;
};

struct RunOptions {
  // When set: evaluations.csv grows row by row during training; summary.json and checkpoint.json are
  // written at the end.
  std::optional<std::filesystem::path> output_dir;
  std::function<bool(const EvalReport&)> on_report;
};

TrainingResult run_training(const RunConfig& config, const RunOptions& options = {});

// Derives independent seeds for the trainer's random streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mdqn

#include "mdqn/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

namespace {

using nlohmann::json;

constexpr std::uint64_t kActStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kEpisodeStream = 3;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kInitStream = 5;

std::span<const double> as_span(const Observation& o) { return {o.data(), o.size()}; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport evaluate_policy(const RunConfig& config, const Policy& policy, int episodes, std::uint64_t seed,
                           std::int64_t updates) {
  if (episodes < 1) throw UsageError("evaluate: episode count must be positive");
  EnvConfig env_config = config.env;
  env_config.max_steps = config.max_test_episode_length;
  auto env = make_environment(env_config);
  std::mt19937_64 episode_seeds(derive_seed(seed, 0));
  std::mt19937_64 rng(derive_seed(seed, 1));

  EvalReport report;
  report.updates = updates;
  report.episodes = episodes;
  double reward_sum = 0.0;
  double reward_sq = 0.0;
  double steps_sum = 0.0;
  double q_sum = 0.0;
  std::int64_t q_count = 0;
  double deliveries = 0.0;
  for (int e = 0; e < episodes; ++e) {
    auto obs = env->reset(episode_seeds());
    std::array<double, kNumAgents> returns{0.0, 0.0};
    while (!env->terminal()) {
      const ActionChoice choice = policy(*env, obs, rng);
      const StepResult step = env->step(choice.joint);
      returns[0] += step.rewards[0];
      returns[1] += step.rewards[1];
      q_sum += choice.q_value;
      ++q_count;
      obs = step.next_obs;
    }
    const double episode_reward = 0.5 * (returns[0] + returns[1]);
    reward_sum += episode_reward;
    reward_sq += episode_reward * episode_reward;
    steps_sum += env->state().step_count;
    deliveries += env->state().boxes_delivered;
    if (returns[0] != returns[1]) report.returns_matched = false;
  }
  const double n = episodes;
  report.mean_reward = reward_sum / n;
  report.reward_sd = std::sqrt(std::max(0.0, reward_sq / n - report.mean_reward * report.mean_reward));
  report.mean_steps = steps_sum / n;
  report.mean_max_q = q_count > 0 ? q_sum / static_cast<double>(q_count) : 0.0;
  if (config.env.kind == EnvKind::kWarehouse) report.deliveries_per_episode = deliveries / n;
  return report;
}

EvalReport evaluate(const RunConfig& config, std::span<const NetworkParams> params, int episodes, std::uint64_t seed,
                    std::int64_t updates) {
  const auto expected = static_cast<std::size_t>(learner_count(config.algorithm));
  if (params.size() != expected && params.size() != 1) {
    throw UsageError("evaluate: expected " + std::to_string(expected) + " network(s) for " +
                     std::string(algorithm_name(config.algorithm)));
  }
  const auto env = make_environment(config.env);
  const int num_actions = env->num_actions();
  const int out_dim = network_output_dim(config.algorithm, num_actions);
  for (const auto& p : params) {
    if (p.output_dim() != out_dim || p.input_dim() != env->observation_dim()) {
      throw UsageError("evaluate: network dimensions do not match the algorithm and environment");
    }
  }
  const Policy policy = [&](const Environment&, const std::array<Observation, kNumAgents>& obs,
                            std::mt19937_64& rng) {
    return choose_action(config.algorithm, obs, params, config.evaluation_epsilon, rng, config.nash, num_actions,
                         /*want_q_value=*/true);
  };
  return evaluate_policy(config, policy, episodes, seed, updates);
}

std::optional<std::int64_t> convergence_update(std::span<const EvalReport> reports, double threshold, int window) {
  if (window < 1) throw UsageError("convergence window must be positive");
  const auto w = static_cast<std::size_t>(window);
  double rolling = 0.0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    rolling += reports[k].mean_reward;
    if (k >= w) rolling -= reports[k - w].mean_reward;
    if (k + 1 >= w && rolling / static_cast<double>(w) > threshold) return reports[k].updates;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Results

std::string csv_header(bool with_deliveries) {
  return with_deliveries ? "updates,mean_reward,reward_sd,mean_steps,mean_max_q,deliveries_per_episode"
                         : "updates,mean_reward,reward_sd,mean_steps,mean_max_q";
}

std::string csv_row(const EvalReport& r, bool with_deliveries) {
  std::ostringstream out;
  out << std::setprecision(10) << r.updates << ',' << r.mean_reward << ',' << r.reward_sd << ',' << r.mean_steps << ','
      << r.mean_max_q;
  if (with_deliveries) out << ',' << r.deliveries_per_episode.value_or(0.0);
  return out.str();
}

json summary_json(const RunConfig& config, std::span<const EvalReport> reports) {
  const auto env = make_environment(config.env);
  const double threshold = config.convergence_fraction * env->max_episode_return();
  const auto converged = convergence_update(reports, threshold, config.convergence_window);
  json s;
  s["config"] = to_json(config);
  s["evaluations"] = reports.size();
  s["convergence_threshold"] = threshold;
  s["convergence_updates"] = converged ? json(*converged) : json("n/a");
  if (!reports.empty()) {
    const EvalReport* best = &reports.front();
    for (const auto& r : reports) {
      if (r.mean_reward > best->mean_reward) best = &r;
    }
    s["best_mean_reward"] = best->mean_reward;
    s["best_updates"] = best->updates;
    const EvalReport& last = reports.back();
    json final_report = {{"updates", last.updates},
                         {"mean_reward", last.mean_reward},
                         {"reward_sd", last.reward_sd},
                         {"mean_steps", last.mean_steps},
                         {"mean_max_q", last.mean_max_q}};
    if (last.deliveries_per_episode) final_report["deliveries_per_episode"] = *last.deliveries_per_episode;
    s["final"] = final_report;
  }
  return s;
}

void emit_results(const RunConfig& config, std::span<const EvalReport> reports, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const bool deliveries = config.env.kind == EnvKind::kWarehouse;
  std::ofstream csv(dir / "evaluations.csv");
  if (!csv) throw IoError("cannot write '" + (dir / "evaluations.csv").string() + "'");
  csv << csv_header(deliveries) << '\n';
  for (const auto& r : reports) csv << csv_row(r, deliveries) << '\n';
  std::ofstream summary(dir / "summary.json");
  if (!summary) throw IoError("cannot write '" + (dir / "summary.json").string() + "'");
  summary << summary_json(config, reports).dump(2) << '\n';
  if (!csv || !summary) throw IoError("write failed under '" + dir.string() + "'");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  json j;
  j["format"] = "mdqn-checkpoint";
  j["version"] = 1;
  j["config"] = to_json(checkpoint.config);
  j["updates"] = checkpoint.updates;
  j["networks"] = json::array();
  for (const auto& n : checkpoint.networks) j["networks"].push_back(to_json(n));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "mdqn-checkpoint") throw IoError("'" + path.string() + "' is not an mdqn checkpoint");
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  c.updates = j.value("updates", std::int64_t{0});
  for (const auto& n : j.at("networks")) c.networks.push_back(network_from_json(n));
  return c;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(RunConfig config) : config_(std::move(config)) {
  validate(config_);
  config_.topology.dissemination_freq = config_.target_dissemination_freq;
  EnvConfig env_config = config_.env;
  env_config.max_steps = config_.max_training_episode_length;
  env_ = make_environment(env_config);
  num_actions_ = env_->num_actions();

  act_rng_.seed(derive_seed(config_.seed, kActStream));
  sample_rng_.seed(derive_seed(config_.seed, kSampleStream));
  episode_seed_rng_.seed(derive_seed(config_.seed, kEpisodeStream));
  eval_seed_ = derive_seed(config_.seed, kEvalStream);
  std::mt19937_64 init_rng(derive_seed(config_.seed, kInitStream));

  const NetworkSpec spec = config_.resolved_network(*env_);
  const bool async = config_.topology.variant == Topology::kAsyncSingle;
  const int learners = async ? 1 : learner_count(config_.algorithm);
  for (int i = 0; i < learners; ++i) {
    online_.push_back(NetworkParams::glorot(spec, init_rng));
    target_.push_back(snapshot_params(online_.back()));
    adam_.emplace_back(online_.back(), config_.adam());
    buffers_.emplace_back(config_.replay_capacity, config_.burn_in, env_->observation_dim());
  }
  if (async) snapshots_.assign(kNumAgents, snapshot_params(online_.front()));
  obs_ = env_->reset(next_episode_seed());
}

std::span<const NetworkParams> Trainer::acting() const {
  return snapshots_.empty() ? std::span<const NetworkParams>(online_) : std::span<const NetworkParams>(snapshots_);
}

void Trainer::store(const std::array<Observation, kNumAgents>& obs, const JointAction& joint, const StepResult& step) {
  const bool joint_space = is_joint_space(config_.algorithm);
  const int joint_idx = joint_index(joint, num_actions_);
  auto transition_for = [&](int agent, ReplayBuffer& buffer) {
    const auto frame = static_cast<std::size_t>(observation_frame(config_.algorithm, agent));
    const int action = joint_space ? joint_idx : action_index(joint.per_agent[static_cast<std::size_t>(agent)]);
    buffer.push(as_span(obs[frame]), action, step.rewards[static_cast<std::size_t>(agent)],
                as_span(step.next_obs[frame]), step.terminal);
  };
  if (config_.topology.variant == Topology::kAsyncSingle) {
    // Every agent's experience lands in the shared buffer.
    const int writers = config_.topology.single_writer ? 1 : kNumAgents;
    for (int agent = 0; agent < writers; ++agent) transition_for(agent, buffers_.front());
    return;
  }
  for (std::size_t l = 0; l < buffers_.size(); ++l) transition_for(static_cast<int>(l), buffers_[l]);
}

bool Trainer::env_step() {
  const double epsilon = epsilon_at(config_.exploration(), updates_);
  const ActionChoice choice =
      choose_action(config_.algorithm, obs_, acting(), epsilon, act_rng_, config_.nash, num_actions_);
  const StepResult step = env_->step(choice.joint);
  store(obs_, choice.joint, step);
  ++env_steps_;
  obs_ = step.terminal ? env_->reset(next_episode_seed()) : step.next_obs;

  for (const auto& b : buffers_) {
    if (!b.ready()) return false;
  }
  if (env_steps_ % config_.model_update_frequency != 0) return false;
  update();
  return true;
}

LossAndGradient Trainer::learner_gradient(std::size_t learner, const SampledBatch& batch) const {
  const Eigen::VectorXd future =
      bootstrap_values(config_.algorithm, batch.next_obs, target_, static_cast<int>(learner), config_.nash);
  TrainingBatch training;
  training.inputs = batch.obs;
  training.actions = batch.actions;
  training.targets.resize(batch.actions.size());
  for (std::size_t k = 0; k < batch.actions.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    training.targets[k] =
        batch.terminals[k] ? batch.rewards[col] : batch.rewards[col] + config_.discount * future[col];
  }
  return backward(online_.at(learner), training);
}

void Trainer::update() {
  for (std::size_t l = 0; l < online_.size(); ++l) {
    buffers_[l].sample_batch(static_cast<std::size_t>(config_.batch_size), sample_rng_, scratch_);
    const LossAndGradient lg = learner_gradient(l, scratch_);
    adam_[l].config = config_.adam();
    adam_step(online_[l], adam_[l], lg.gradient);
  }
  ++updates_;
  if (updates_ % config_.target_dissemination_freq == 0) {
    for (std::size_t l = 0; l < online_.size(); ++l) target_[l] = snapshot_params(online_[l]);
  }
  if (!snapshots_.empty()) disseminate(config_.topology, online_.front(), updates_, snapshots_);
}

EvalReport Trainer::evaluate_now() const {
  return evaluate(config_, acting(), config_.evaluation_episodes, eval_seed_, updates_);
}

TrainingResult Trainer::run(const std::function<bool(const EvalReport&)>& on_report) {
  TrainingResult result;
  auto record = [&]() {
    result.reports.push_back(evaluate_now());
    return !on_report || on_report(result.reports.back());
  };
  bool keep_going = record();
  while (keep_going && updates_ < config_.total_updates) {
    if (env_step() && updates_ % config_.evaluation_frequency == 0) keep_going = record();
  }
  result.networks = online_;
  result.updates = updates_;
  result.env_steps = env_steps_;
  return result;
}

TrainingResult run_training(const RunConfig& config, const RunOptions& options) {
  Trainer trainer(config);
  std::ofstream csv;
  const bool deliveries = config.env.kind == EnvKind::kWarehouse;
  if (options.output_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.output_dir, ec);
    const auto path = *options.output_dir / "evaluations.csv";
    csv.open(path);
    if (!csv) throw IoError("cannot write '" + path.string() + "'");
    csv << csv_header(deliveries) << '\n' << std::flush;
  }
  TrainingResult result = trainer.run([&](const EvalReport& r) {
    if (csv.is_open()) csv << csv_row(r, deliveries) << '\n' << std::flush;
    return !options.on_report || options.on_report(r);
  });
  if (options.output_dir) {
    emit_results(trainer.config(), result.reports, *options.output_dir);
    save_checkpoint({trainer.config(), result.updates, result.networks}, *options.output_dir / "checkpoint.json");
  }
  return result;
}

}  // namespace mdqn

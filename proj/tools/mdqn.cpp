// mdqn: train, evaluate and watch multi-agent Q-learners on the gridworld games.

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "mdqn/errors.hpp"
#include "mdqn/harness.hpp"

namespace {

void print_report(const mdqn::EvalReport& r) {
  std::cout << "updates " << r.updates << "  reward " << std::fixed << std::setprecision(2) << r.mean_reward << " +- "
            << r.reward_sd << "  steps " << r.mean_steps << "  q " << r.mean_max_q;
  if (r.deliveries_per_episode) std::cout << "  deliveries " << *r.deliveries_per_episode;
  std::cout << std::defaultfloat << std::endl;
}

int train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  mdqn::RunConfig config = mdqn::load_config(config_path);
  if (seed) config.seed = *seed;
  mdqn::RunOptions options;
  options.output_dir = out_dir;
  options.on_report = [](const mdqn::EvalReport& r) {
    print_report(r);
    return true;
  };
  const auto result = mdqn::run_training(config, options);
  const auto summary = mdqn::summary_json(config, result.reports);
  std::cout << "convergence: " << summary["convergence_updates"].dump() << "\nresults written to " << out_dir
            << std::endl;
  return 0;
}

int eval(const std::string& checkpoint_path, int episodes, std::uint64_t seed) {
  const mdqn::Checkpoint checkpoint = mdqn::load_checkpoint(checkpoint_path);
  print_report(mdqn::evaluate(checkpoint.config, checkpoint.networks, episodes, seed, checkpoint.updates));
  return 0;
}

int render(const std::string& config_path, const std::string& checkpoint_path, std::uint64_t seed) {
  const mdqn::RunConfig config = mdqn::load_config(config_path);
  const mdqn::Checkpoint checkpoint = mdqn::load_checkpoint(checkpoint_path);
  mdqn::EnvConfig env_config = config.env;
  env_config.max_steps = config.max_test_episode_length;
  auto env = mdqn::make_environment(env_config);
  std::mt19937_64 rng(seed);
  auto obs = env->reset(seed);
  std::cout << env->render() << '\n';
  std::array<double, mdqn::kNumAgents> returns{0.0, 0.0};
  while (!env->terminal()) {
    const auto choice = mdqn::choose_action(config.algorithm, obs, checkpoint.networks, config.evaluation_epsilon, rng,
                                            config.nash, env->num_actions(), true);
    const auto step = env->step(choice.joint);
    returns[0] += step.rewards[0];
    returns[1] += step.rewards[1];
    std::cout << "A0 " << mdqn::action_name(choice.joint.per_agent[0]) << ", A1 "
              << mdqn::action_name(choice.joint.per_agent[1]) << "  q " << choice.q_value << "  rewards "
              << step.rewards[0] << ' ' << step.rewards[1] << '\n'
              << env->render() << '\n';
    obs = step.next_obs;
  }
  std::cout << "returns " << returns[0] << ' ' << returns[1] << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent deep Q-learning on cooperative gridworlds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir = "runs/latest";
  std::optional<std::uint64_t> train_seed;
  std::uint64_t seed = 0;
  int episodes = 1000;

  auto* train_cmd = app.add_subcommand("train", "Train from a run configuration");
  train_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train_seed, "Override the configured seed");
  train_cmd->add_option("--out", out_dir, "Output directory for CSV, summary and checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed, "Evaluation seed");

  auto* render_cmd = app.add_subcommand("render", "Print an ASCII rollout of a checkpoint");
  render_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--seed", seed, "Episode seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return train(config_path, train_seed, out_dir);
    if (eval_cmd->parsed()) return eval(checkpoint_path, episodes, seed);
    if (render_cmd->parsed()) return render(config_path, checkpoint_path, seed);
  } catch (const mdqn::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mdqn/grid.hpp"

namespace mdqn {

enum class Architecture { kSingle, kSplit };

std::string_view architecture_name(Architecture arch);
Architecture architecture_from_name(std::string_view name);

struct NetworkSpec {
  Architecture arch = Architecture::kSingle;
  int input_dim = 0;
  int output_dim = 0;
  // Single stream: sigmoid hidden widths, followed by a linear output layer.
  std::vector<int> hidden{64, 64};
  // Split stream: upscaling widths of the two input branches and of the ReLU joint layer. The joint
  // layer output is added to the self branch, so joint_width must equal self_width.
  int self_width = 32;
  int other_width = 32;
  int joint_width = 32;
  std::vector<int> self_indices;
  std::vector<int> other_indices;
};

// Throws ConfigError when the spec cannot describe a network.
void validate(const NetworkSpec& spec);

struct LayerShape {
  std::string name;
  int rows = 0;  // fan out
  int cols = 0;  // fan in
  Eigen::Index weight_offset = 0;
  Eigen::Index bias_offset = 0;
};

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// All weights and biases of one Q-network in a single flat vector. Layers are column-major
// (fan_out x fan_in) views into that vector, so copies are deep and gradients, Adam moments and
// checkpoints share one layout.
class NetworkParams {
 public:
  NetworkParams() = default;

  static NetworkParams zeros(const NetworkSpec& spec);
  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static NetworkParams glorot(const NetworkSpec& spec, std::mt19937_64& rng);

  const NetworkSpec& spec() const { return spec_; }
  Architecture architecture() const { return spec_.arch; }
  int input_dim() const { return spec_.input_dim; }
  int output_dim() const { return spec_.output_dim; }

  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t layer_index(std::string_view name) const;

  MatrixMap weight(std::size_t layer);
  ConstMatrixMap weight(std::size_t layer) const;
  VectorMap bias(std::size_t layer);
  ConstVectorMap bias(std::size_t layer) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  bool operator==(const NetworkParams& other) const;

 private:
  explicit NetworkParams(const NetworkSpec& spec);

  NetworkSpec spec_;
  std::vector<LayerShape> layers_;
  Eigen::VectorXd values_;
};

// Deep copy; later updates to the source do not reach the snapshot.
NetworkParams snapshot_params(const NetworkParams& params);

// Activations retained by a batched forward pass for backpropagation.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> hidden;  // single: sigmoid outputs per hidden layer
  Eigen::MatrixXd self_branch;          // split: sigma(W1 s1 + b1)
  Eigen::MatrixXd other_branch;         // split: sigma(W2 s2 + b2)
  Eigen::MatrixXd joint_pre;            // split: Wj [state1; state2] + bj
  Eigen::MatrixXd embedding;            // split: state1 + relu(joint_pre)
  Eigen::MatrixXd inputs;
};

// Inputs are one observation per column. Returns output_dim x batch Q-values.
Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs,
                              ForwardCache* cache = nullptr);

// Dispatches on the architecture; for split networks the observation is sliced by the spec's
// self/other index sets.
Eigen::VectorXd forward(const NetworkParams& params, std::span<const double> obs);
Eigen::VectorXd forward_single(const NetworkParams& params, std::span<const double> obs);
Eigen::VectorXd forward_split(const NetworkParams& params, std::span<const double> self_slice,
                              std::span<const double> other_slice);

struct HuberResult {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d prediction
};

// Huber loss with delta = 1 on e = prediction - target.
HuberResult huber_loss(double prediction, double target);

struct TrainingBatch {
  Eigen::MatrixXd inputs;  // input_dim x n
  std::vector<int> actions;
  std::vector<double> targets;
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as NetworkParams::values()
};

// Mean Huber loss over the batch of Q(input, action) against the targets, and its exact gradient.
LossAndGradient backward(const NetworkParams& params, const TrainingBatch& batch);

struct AdamConfig {
  double learning_rate = 0.01;
  // Inverse-time decay: lr_t = learning_rate / (1 + decay * step).
  double decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(const NetworkParams& params, AdamConfig cfg);

  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;

  double current_learning_rate() const { return config.learning_rate / (1.0 + config.decay * static_cast<double>(step)); }
};

void adam_step(NetworkParams& params, AdamState& state, const Eigen::VectorXd& gradient);

// Checkpoint encoding: architecture tag and dimensions in a header object, then one entry per layer
// name holding row-major weight rows and the bias vector.
nlohmann::json to_json(const NetworkParams& params);
NetworkParams network_from_json(const nlohmann::json& j);

}  // namespace mdqn

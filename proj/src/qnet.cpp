#include "mdqn/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdqn/errors.hpp"

namespace mdqn {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Eigen::MatrixXd slice_rows(const Eigen::MatrixXd& inputs, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = inputs.row(rows[r]);
  return out;
}

void check_indices(const std::vector<int>& indices, int input_dim, const char* field) {
  if (indices.empty()) throw ConfigError(std::string("network.") + field + ": must not be empty");
  for (int i : indices) {
    if (i < 0 || i >= input_dim) throw ConfigError(std::string("network.") + field + ": index out of range");
  }
}

}  // namespace

std::string_view architecture_name(Architecture arch) { return arch == Architecture::kSingle ? "single" : "split"; }

Architecture architecture_from_name(std::string_view name) {
  if (name == "single") return Architecture::kSingle;
  if (name == "split") return Architecture::kSplit;
  throw ConfigError("network.architecture: expected 'single' or 'split', got '" + std::string(name) + "'");
}

void validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1) throw ConfigError("network.input_dim: must be positive");
  if (spec.output_dim < 1) throw ConfigError("network.output_dim: must be positive");
  if (spec.arch == Architecture::kSingle) {
    if (spec.hidden.empty()) throw ConfigError("network.hidden: single stream needs at least one hidden layer");
    for (int w : spec.hidden) {
      if (w < 1) throw ConfigError("network.hidden: widths must be positive");
    }
    return;
  }
  if (spec.self_width < 1 || spec.other_width < 1 || spec.joint_width < 1) {
    throw ConfigError("network.split widths must be positive");
  }
  if (spec.joint_width != spec.self_width) {
    throw ConfigError("network.joint_width: residual width " + std::to_string(spec.joint_width) +
                      " must equal self branch width " + std::to_string(spec.self_width));
  }
  check_indices(spec.self_indices, spec.input_dim, "self_indices");
  check_indices(spec.other_indices, spec.input_dim, "other_indices");
}

// ---------------------------------------------------------------------------
// NetworkParams

NetworkParams::NetworkParams(const NetworkSpec& spec) : spec_(spec) {
  validate(spec_);
  auto add = [this](std::string name, int rows, int cols, Eigen::Index& offset) {
    LayerShape shape{std::move(name), rows, cols, offset, offset + static_cast<Eigen::Index>(rows) * cols};
    offset = shape.bias_offset + rows;
    layers_.push_back(std::move(shape));
  };
  Eigen::Index offset = 0;
  if (spec_.arch == Architecture::kSingle) {
    int fan_in = spec_.input_dim;
    for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
      add("hidden" + std::to_string(l + 1), spec_.hidden[l], fan_in, offset);
      fan_in = spec_.hidden[l];
    }
    add("output", spec_.output_dim, fan_in, offset);
  } else {
    add("self", spec_.self_width, static_cast<int>(spec_.self_indices.size()), offset);
    add("other", spec_.other_width, static_cast<int>(spec_.other_indices.size()), offset);
    add("joint", spec_.joint_width, spec_.self_width + spec_.other_width, offset);
    add("output", spec_.output_dim, spec_.joint_width, offset);
  }
  values_ = Eigen::VectorXd::Zero(offset);
}

NetworkParams NetworkParams::zeros(const NetworkSpec& spec) { return NetworkParams(spec); }

NetworkParams NetworkParams::glorot(const NetworkSpec& spec, std::mt19937_64& rng) {
  NetworkParams params(spec);
  for (std::size_t l = 0; l < params.layers_.size(); ++l) {
    const auto& shape = params.layers_[l];
    const double limit = std::sqrt(6.0 / (shape.rows + shape.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = params.weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
  return params;
}

std::size_t NetworkParams::layer_index(std::string_view name) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].name == name) return l;
  }
  throw UsageError("no layer named '" + std::string(name) + "'");
}

MatrixMap NetworkParams::weight(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return MatrixMap(values_.data() + s.weight_offset, s.rows, s.cols);
}
ConstMatrixMap NetworkParams::weight(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return ConstMatrixMap(values_.data() + s.weight_offset, s.rows, s.cols);
}
VectorMap NetworkParams::bias(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return VectorMap(values_.data() + s.bias_offset, s.rows);
}
ConstVectorMap NetworkParams::bias(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return ConstVectorMap(values_.data() + s.bias_offset, s.rows);
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  return spec_.arch == other.spec_.arch && spec_.input_dim == other.spec_.input_dim &&
         spec_.output_dim == other.spec_.output_dim && values_.size() == other.values_.size() &&
         values_ == other.values_;
}

NetworkParams snapshot_params(const NetworkParams& params) { return params; }

// ---------------------------------------------------------------------------
// Forward

Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs, ForwardCache* cache) {
  if (inputs.rows() != params.input_dim()) {
    throw UsageError("forward: observation length " + std::to_string(inputs.rows()) + " does not match input dim " +
                     std::to_string(params.input_dim()));
  }
  const auto& spec = params.spec();
  if (spec.arch == Architecture::kSingle) {
    const std::size_t n_hidden = spec.hidden.size();
    if (cache) {
      cache->inputs = inputs;
      cache->hidden.resize(n_hidden);
    }
    Eigen::MatrixXd h = inputs;
    for (std::size_t l = 0; l < n_hidden; ++l) {
      Eigen::MatrixXd z = params.weight(l) * h;
      z.colwise() += params.bias(l);
      h = sigmoid(z);
      if (cache) cache->hidden[l] = h;
    }
    Eigen::MatrixXd out = params.weight(n_hidden) * h;
    out.colwise() += params.bias(n_hidden);
    return out;
  }

  const Eigen::MatrixXd s1 = slice_rows(inputs, spec.self_indices);
  const Eigen::MatrixXd s2 = slice_rows(inputs, spec.other_indices);
  Eigen::MatrixXd z1 = params.weight(0) * s1;
  z1.colwise() += params.bias(0);
  Eigen::MatrixXd z2 = params.weight(1) * s2;
  z2.colwise() += params.bias(1);
  const Eigen::MatrixXd state1 = sigmoid(z1);
  const Eigen::MatrixXd state2 = sigmoid(z2);
  const auto joint_w = params.weight(2);
  Eigen::MatrixXd joint_pre = joint_w.leftCols(spec.self_width) * state1 + joint_w.rightCols(spec.other_width) * state2;
  joint_pre.colwise() += params.bias(2);
  Eigen::MatrixXd embedding = state1 + joint_pre.cwiseMax(0.0);
  Eigen::MatrixXd out = params.weight(3) * embedding;
  out.colwise() += params.bias(3);
  if (cache) {
    cache->inputs = inputs;
    cache->self_branch = state1;
    cache->other_branch = state2;
    cache->joint_pre = std::move(joint_pre);
    cache->embedding = std::move(embedding);
  }
  return out;
}

Eigen::VectorXd forward(const NetworkParams& params, std::span<const double> obs) {
  const Eigen::Map<const Eigen::MatrixXd> column(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  return forward_batch(params, column);
}

Eigen::VectorXd forward_single(const NetworkParams& params, std::span<const double> obs) {
  if (params.architecture() != Architecture::kSingle) throw UsageError("forward_single: network is split stream");
  return forward(params, obs);
}

Eigen::VectorXd forward_split(const NetworkParams& params, std::span<const double> self_slice,
                              std::span<const double> other_slice) {
  const auto& spec = params.spec();
  if (spec.arch != Architecture::kSplit) throw UsageError("forward_split: network is single stream");
  if (self_slice.size() != spec.self_indices.size() || other_slice.size() != spec.other_indices.size()) {
    throw UsageError("forward_split: slice lengths do not match the network's branches");
  }
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(spec.input_dim);
  for (std::size_t i = 0; i < self_slice.size(); ++i) obs[spec.self_indices[i]] = self_slice[i];
  for (std::size_t i = 0; i < other_slice.size(); ++i) obs[spec.other_indices[i]] = other_slice[i];
  return forward_batch(params, obs);
}

// ---------------------------------------------------------------------------
// Loss and gradients

HuberResult huber_loss(double prediction, double target) {
  const double e = prediction - target;
  const double a = std::abs(e);
  if (a <= 1.0) return {0.5 * e * e, e};
  return {a - 0.5, e > 0.0 ? 1.0 : -1.0};
}

LossAndGradient backward(const NetworkParams& params, const TrainingBatch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.actions.size());
  if (n == 0) throw UsageError("backward: empty batch");
  if (batch.inputs.cols() != n || static_cast<Eigen::Index>(batch.targets.size()) != n) {
    throw UsageError("backward: inputs, actions and targets disagree on batch size");
  }
  ForwardCache cache;
  const Eigen::MatrixXd out = forward_batch(params, batch.inputs, &cache);

  LossAndGradient result;
  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int a = batch.actions[static_cast<std::size_t>(k)];
    if (a < 0 || a >= out.rows()) throw UsageError("backward: action index out of range");
    const auto h = huber_loss(out(a, k), batch.targets[static_cast<std::size_t>(k)]);
    result.loss += h.loss;
    d_out(a, k) = h.grad;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  result.loss *= inv_n;
  d_out *= inv_n;

  NetworkParams grads = NetworkParams::zeros(params.spec());
  const auto& spec = params.spec();
  if (spec.arch == Architecture::kSingle) {
    const std::size_t n_hidden = spec.hidden.size();
    Eigen::MatrixXd delta = d_out;
    for (std::size_t l = n_hidden + 1; l-- > 0;) {
      const Eigen::MatrixXd& below = l == 0 ? cache.inputs : cache.hidden[l - 1];
      grads.weight(l).noalias() = delta * below.transpose();
      grads.bias(l) = delta.rowwise().sum();
      if (l == 0) break;
      const Eigen::MatrixXd& act = cache.hidden[l - 1];
      delta = ((params.weight(l).transpose() * delta).array() * act.array() * (1.0 - act.array())).matrix();
    }
  } else {
    const Eigen::MatrixXd& state1 = cache.self_branch;
    const Eigen::MatrixXd& state2 = cache.other_branch;
    grads.weight(3).noalias() = d_out * cache.embedding.transpose();
    grads.bias(3) = d_out.rowwise().sum();
    const Eigen::MatrixXd d_embed = params.weight(3).transpose() * d_out;
    const Eigen::MatrixXd d_joint_pre = (d_embed.array() * (cache.joint_pre.array() > 0.0).cast<double>()).matrix();
    auto g_joint = grads.weight(2);
    g_joint.leftCols(spec.self_width).noalias() = d_joint_pre * state1.transpose();
    g_joint.rightCols(spec.other_width).noalias() = d_joint_pre * state2.transpose();
    grads.bias(2) = d_joint_pre.rowwise().sum();
    const auto joint_w = params.weight(2);
    const Eigen::MatrixXd d_state1 = d_embed + joint_w.leftCols(spec.self_width).transpose() * d_joint_pre;
    const Eigen::MatrixXd d_state2 = joint_w.rightCols(spec.other_width).transpose() * d_joint_pre;
    const Eigen::MatrixXd dz1 = (d_state1.array() * state1.array() * (1.0 - state1.array())).matrix();
    const Eigen::MatrixXd dz2 = (d_state2.array() * state2.array() * (1.0 - state2.array())).matrix();
    grads.weight(0).noalias() = dz1 * slice_rows(cache.inputs, spec.self_indices).transpose();
    grads.bias(0) = dz1.rowwise().sum();
    grads.weight(1).noalias() = dz2 * slice_rows(cache.inputs, spec.other_indices).transpose();
    grads.bias(1) = dz2.rowwise().sum();
  }
  result.gradient = std::move(grads.values());
  return result;
}

// ---------------------------------------------------------------------------
// Adam

AdamState::AdamState(const NetworkParams& params, AdamConfig cfg)
    : config(cfg),
      first_moment(Eigen::VectorXd::Zero(params.size())),
      second_moment(Eigen::VectorXd::Zero(params.size())) {}

void adam_step(NetworkParams& params, AdamState& state, const Eigen::VectorXd& gradient) {
  if (gradient.size() != params.size() || state.first_moment.size() != params.size()) {
    throw UsageError("adam_step: gradient / optimizer state shape does not match the parameters");
  }
  const auto& c = state.config;
  const double lr = state.current_learning_rate();
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * gradient;
  state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * gradient.cwiseAbs2();
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  params.values().array() -= lr * (state.first_moment.array() / correction1) /
                             ((state.second_moment.array() / correction2).sqrt() + c.epsilon);
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json to_json(const NetworkParams& params) {
  const auto& spec = params.spec();
  nlohmann::json j;
  j["architecture"] = architecture_name(spec.arch);
  j["input_dim"] = spec.input_dim;
  j["output_dim"] = spec.output_dim;
  if (spec.arch == Architecture::kSingle) {
    j["hidden"] = spec.hidden;
  } else {
    j["self_width"] = spec.self_width;
    j["other_width"] = spec.other_width;
    j["joint_width"] = spec.joint_width;
    j["self_indices"] = spec.self_indices;
    j["other_indices"] = spec.other_indices;
  }
  nlohmann::json layers = nlohmann::json::object();
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    const auto w = params.weight(l);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      rows.push_back(std::move(row));
    }
    const auto b = params.bias(l);
    layers[params.layers()[l].name] = {{"weight", std::move(rows)}, {"bias", std::vector<double>(b.begin(), b.end())}};
  }
  j["layers"] = std::move(layers);
  return j;
}

NetworkParams network_from_json(const nlohmann::json& j) {
  try {
    NetworkSpec spec;
    spec.arch = architecture_from_name(j.at("architecture").get<std::string>());
    spec.input_dim = j.at("input_dim").get<int>();
    spec.output_dim = j.at("output_dim").get<int>();
    if (spec.arch == Architecture::kSingle) {
      spec.hidden = j.at("hidden").get<std::vector<int>>();
    } else {
      spec.self_width = j.at("self_width").get<int>();
      spec.other_width = j.at("other_width").get<int>();
      spec.joint_width = j.at("joint_width").get<int>();
      spec.self_indices = j.at("self_indices").get<std::vector<int>>();
      spec.other_indices = j.at("other_indices").get<std::vector<int>>();
    }
    NetworkParams params = NetworkParams::zeros(spec);
    const auto& layers = j.at("layers");
    for (std::size_t l = 0; l < params.layers().size(); ++l) {
      const auto& entry = layers.at(params.layers()[l].name);
      const auto rows = entry.at("weight").get<std::vector<std::vector<double>>>();
      const auto bias = entry.at("bias").get<std::vector<double>>();
      auto w = params.weight(l);
      auto b = params.bias(l);
      if (static_cast<Eigen::Index>(rows.size()) != w.rows() || static_cast<Eigen::Index>(bias.size()) != b.size()) {
        throw IoError("checkpoint: layer '" + params.layers()[l].name + "' has the wrong shape");
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != w.cols()) {
          throw IoError("checkpoint: layer '" + params.layers()[l].name + "' has the wrong shape");
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = bias[static_cast<std::size_t>(r)];
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: malformed network entry: ") + e.what());
  }
}

}  // namespace mdqn

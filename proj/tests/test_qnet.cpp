#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mdqn/errors.hpp"
#include "mdqn/qnet.hpp"
#include "oracles.hpp"

using namespace mdqn;
using namespace mdqn::testing;

namespace {

NetworkSpec single_spec(int in = 4, int out = 5, std::vector<int> hidden = {64, 64}) {
  NetworkSpec s;
  s.arch = Architecture::kSingle;
  s.input_dim = in;
  s.output_dim = out;
  s.hidden = std::move(hidden);
  return s;
}

NetworkSpec split_spec(int out = 25, int width = 32) {
  NetworkSpec s;
  s.arch = Architecture::kSplit;
  s.input_dim = 4;
  s.output_dim = out;
  s.self_width = s.other_width = s.joint_width = width;
  s.self_indices = {0, 1};
  s.other_indices = {2, 3};
  return s;
}

}  // namespace

TEST_CASE("zero network outputs zeros") {
  for (const auto& spec : {single_spec(), split_spec()}) {
    const auto p = NetworkParams::zeros(spec);
    const auto q = forward(p, std::vector<double>{0.1, 0.7, 0.3, 0.9});
    CHECK(q.size() == spec.output_dim);
    CHECK(q.isZero(0.0));
  }
}

TEST_CASE("forward matches a straight-line reference") {
  std::mt19937_64 rng(7);
  for (const auto& spec : {single_spec(), single_spec(8, 16, {10, 7, 5}), split_spec()}) {
    const auto p = NetworkParams::glorot(spec, rng);
    for (int trial = 0; trial < 50; ++trial) {
      const auto obs = random_vector(static_cast<std::size_t>(spec.input_dim), rng, 0.0, 1.0);
      const auto q = forward(p, obs);
      const auto ref = reference_forward(p, obs);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(q[static_cast<Eigen::Index>(i)] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(forward(p, obs) == q);
    }
  }
}

TEST_CASE("forward rejects a wrong observation length") {
  std::mt19937_64 rng(1);
  const auto p = NetworkParams::glorot(single_spec(), rng);
  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0, 2.0}), UsageError);
  const auto s = NetworkParams::glorot(split_spec(), rng);
  CHECK_THROWS_AS(forward_split(s, std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), UsageError);
}

TEST_CASE("split stream requires matching residual width") {
  NetworkSpec s = split_spec();
  s.joint_width = 16;
  CHECK_THROWS_AS(NetworkParams::zeros(s), ConfigError);
}

TEST_CASE("split stream residual vanishes when the joint branch is zero or cut off") {
  std::mt19937_64 rng(3);
  auto p = NetworkParams::glorot(split_spec(), rng);
  randomize(p, rng);
  const std::size_t joint = p.layer_index("joint");
  p.weight(joint).setZero();
  p.bias(joint).setZero();
  const auto reduced = [&](const std::vector<double>& s1) {
    std::vector<double> h = dense(p, 0, s1);
    for (auto& x : h) x = logistic(x);
    return dense(p, 3, h);
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto s1 = random_vector(2, rng);
    const auto s2 = random_vector(2, rng);
    const auto q = forward_split(p, s1, s2);
    const auto ref = reduced(s1);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(q[static_cast<Eigen::Index>(i)] - ref[i]) <= 1e-12);
  }
  randomize(p, rng);
  p.bias(joint).setConstant(-1e6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s1 = random_vector(2, rng);
    const auto q = forward_split(p, s1, random_vector(2, rng));
    const auto ref = reduced(s1);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(q[static_cast<Eigen::Index>(i)] - ref[i]) <= 1e-12);
  }
}

TEST_CASE("huber loss branches") {
  CHECK(huber_loss(0.0, 0.0).loss == 0.0);
  CHECK(huber_loss(0.0, 0.0).grad == 0.0);
  CHECK(huber_loss(0.5, 0.0).loss == doctest::Approx(0.125));
  CHECK(huber_loss(0.5, 0.0).grad == doctest::Approx(0.5));
  CHECK(huber_loss(2.0, 0.0).loss == doctest::Approx(1.5));
  CHECK(huber_loss(2.0, 0.0).grad == 1.0);
  CHECK(huber_loss(0.0, 2.0).grad == -1.0);
}

TEST_CASE("property: huber gradient is bounded and the loss is continuous at the kink") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-200.0, 200.0);
  for (int i = 0; i < 10000; ++i) {
    const auto h = huber_loss(d(rng), d(rng));
    CHECK(std::abs(h.grad) <= 1.0);
    CHECK(h.loss >= 0.0);
  }
  CHECK(huber_loss(1.0 + 1e-12, 0.0).loss == doctest::Approx(huber_loss(1.0, 0.0).loss));
}

TEST_CASE("backward: exact predictions give zero gradient") {
  std::mt19937_64 rng(5);
  for (const auto& spec : {single_spec(), split_spec()}) {
    const auto p = NetworkParams::glorot(spec, rng);
    const std::vector<double> obs{0.2, 0.4, 0.6, 0.8};
    const double q = forward(p, obs)[2];
    const auto lg = backward(p, make_batch({obs}, {2}, {q}));
    CHECK(lg.loss == 0.0);
    CHECK(lg.gradient.isZero(0.0));
  }
}

TEST_CASE("backward: duplicated samples average to the single-sample gradient") {
  std::mt19937_64 rng(6);
  for (const auto& spec : {single_spec(), split_spec()}) {
    const auto p = NetworkParams::glorot(spec, rng);
    const std::vector<double> obs{0.2, 0.4, 0.6, 0.8};
    const auto one = backward(p, make_batch({obs}, {1}, {3.0}));
    const auto two = backward(p, make_batch({obs, obs}, {1, 1}, {3.0, 3.0}));
    CHECK((one.gradient - two.gradient).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(one.loss == doctest::Approx(two.loss));
  }
}

TEST_CASE("backward: analytic gradients agree with central differences") {
  std::mt19937_64 rng(2024);
  double worst_single = 0.0;
  double worst_split = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    worst_single = std::max(worst_single, max_relative_error(single_spec(4, 5, {8, 6}), rng));
    worst_split = std::max(worst_split, max_relative_error(split_spec(9, 6), rng));
  }
  MESSAGE("max relative error: single " << worst_single << ", split " << worst_split);
  CHECK(worst_single < 1e-4);
  CHECK(worst_split < 1e-4);
}

TEST_CASE("backward rejects malformed batches") {
  std::mt19937_64 rng(1);
  const auto p = NetworkParams::glorot(single_spec(), rng);
  const std::vector<double> obs{0.2, 0.4, 0.6, 0.8};
  CHECK_THROWS_AS(backward(p, make_batch({obs}, {7}, {1.0})), UsageError);
  TrainingBatch empty;
  empty.inputs.resize(4, 0);
  CHECK_THROWS_AS(backward(p, empty), UsageError);
}

TEST_CASE("adam: first step moves each parameter by about the learning rate") {
  NetworkSpec spec = single_spec(1, 1, {1});
  auto p = NetworkParams::zeros(spec);
  AdamState state(p, AdamConfig{.learning_rate = 0.01, .decay = 0.0});
  Eigen::VectorXd g = Eigen::VectorXd::Constant(p.size(), 0.1);
  adam_step(p, state, g);
  CHECK(state.step == 1);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p.values()[i] == doctest::Approx(-0.01).epsilon(1e-6));

}

TEST_CASE("adam: a zero gradient on fresh moments leaves parameters alone") {
  std::mt19937_64 rng(8);
  auto p = NetworkParams::glorot(single_spec(), rng);
  AdamState state(p, AdamConfig{});
  const Eigen::VectorXd held = p.values();
  adam_step(p, state, Eigen::VectorXd::Zero(p.size()));
  CHECK(p.values() == held);
  CHECK(state.step == 1);
}

TEST_CASE("adam: matches a hand-rolled scalar trace on a quadratic") {
  // f(theta) = (theta - 3)^2, gradient 2 (theta - 3).
  NetworkSpec spec = single_spec(1, 1, {1});
  auto p = NetworkParams::zeros(spec);
  const AdamConfig cfg{.learning_rate = 0.1, .decay = 1e-2};
  AdamState state(p, cfg);
  double theta = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    const double g = 2.0 * (theta - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    const double lr = 0.1 / (1.0 + 1e-2 * (t - 1));
    theta -= lr * m_hat / (std::sqrt(v_hat) + 1e-8);

    p.values().setConstant(t == 1 ? 0.5 : p.values()[0]);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(p.size(), 2.0 * (p.values()[0] - 3.0));
    adam_step(p, state, grad);
    CHECK(p.values()[0] == doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_CASE("adam: learning rate decays inversely with the step count") {
  auto p = NetworkParams::zeros(single_spec(1, 1, {1}));
  AdamState state(p, AdamConfig{.learning_rate = 0.01, .decay = 1e-4});
  CHECK(state.current_learning_rate() == 0.01);
  for (int i = 0; i < 100; ++i) adam_step(p, state, Eigen::VectorXd::Ones(p.size()));
  CHECK(state.current_learning_rate() == doctest::Approx(0.01 / (1.0 + 1e-4 * 100)));
}

TEST_CASE("property: under a constant gradient the step size settles at the learning rate") {
  for (double g : {1e-3, 1.0, 1e3}) {
    auto p = NetworkParams::zeros(single_spec(1, 1, {1}));
    AdamState state(p, AdamConfig{.learning_rate = 0.01, .decay = 0.0});
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(p.size(), g);
    for (int i = 0; i < 5000; ++i) adam_step(p, state, grad);
    const double before = p.values()[0];
    adam_step(p, state, grad);
    CHECK(std::abs(before - p.values()[0]) == doctest::Approx(0.01).epsilon(1e-3));
  }
}

TEST_CASE("snapshots are deep copies") {
  std::mt19937_64 rng(9);
  for (const auto& spec : {single_spec(), split_spec()}) {
    auto p = NetworkParams::glorot(spec, rng);
    const auto snap = snapshot_params(p);
    CHECK(snapshot_params(snap) == snap);
    std::vector<std::vector<double>> inputs;
    std::vector<Eigen::VectorXd> outputs;
    for (int i = 0; i < 100; ++i) {
      inputs.push_back(random_vector(4, rng, 0.0, 1.0));
      outputs.push_back(forward(snap, inputs.back()));
      CHECK(forward(p, inputs.back()) == outputs.back());
    }
    randomize(p, rng);
    for (int i = 0; i < 100; ++i) CHECK(forward(snap, inputs[static_cast<std::size_t>(i)]) == outputs[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("network json round trip is exact") {
  std::mt19937_64 rng(4);
  for (const auto& spec : {single_spec(), split_spec()}) {
    auto p = NetworkParams::glorot(spec, rng);
    randomize(p, rng);
    const auto back = network_from_json(nlohmann::json::parse(to_json(p).dump()));
    CHECK(back == p);
    CHECK(back.spec().hidden == p.spec().hidden);
  }
  CHECK_THROWS(network_from_json(nlohmann::json::object()));
}

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mdqn/config.hpp"
#include "mdqn/errors.hpp"
#include "mdqn/harness.hpp"

namespace py = pybind11;
using namespace mdqn;

namespace {

RunConfig parse_config(const std::string& text) { return config_from_json(nlohmann::json::parse(text)); }

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["updates"] = r.updates;
  d["episodes"] = r.episodes;
  d["mean_reward"] = r.mean_reward;
  d["reward_sd"] = r.reward_sd;
  d["mean_steps"] = r.mean_steps;
  d["mean_max_q"] = r.mean_max_q;
  d["deliveries_per_episode"] = r.deliveries_per_episode ? py::cast(*r.deliveries_per_episode) : py::none();
  d["returns_matched"] = r.returns_matched;
  return d;
}

PayoffMatrixPair as_pair(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2) {
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols()) throw UsageError("payoff matrices differ in shape");
  return {p1, p2};
}

NashRules rules_from(const std::string& tie_break, const std::string& no_nash, double tolerance) {
  return {tie_break_from_name(tie_break), no_nash_from_name(no_nash), tolerance};
}

// Python-facing environment: owns the concrete environment and speaks in action indices.
class PyEnvironment {
 public:
  PyEnvironment(const std::string& name, std::optional<int> size, std::optional<double> reward,
                std::optional<bool> cooperative, std::optional<int> boxes, std::optional<int> num_prey,
                bool normalize, int max_steps) {
    EnvConfig c = default_env_config(env_kind_from_name(name));
    if (size) c.height = c.width = *size;
    if (reward) c.reward = *reward;
    if (cooperative) c.cooperative = *cooperative;
    if (boxes) c.boxes = *boxes;
    if (num_prey) c.num_prey = *num_prey;
    c.normalize = normalize;
    c.max_steps = max_steps;
    env_ = make_environment(c);
  }

  std::array<Observation, kNumAgents> reset(std::uint64_t seed) { return env_->reset(seed); }

  py::tuple step(std::array<int, kNumAgents> actions) {
    for (int a : actions) {
      if (a < 0 || a >= env_->num_actions()) throw UsageError("action index out of range");
    }
    const auto r = env_->step(JointAction{{action_from_index(actions[0]), action_from_index(actions[1])}});
    return py::make_tuple(r.next_obs, r.rewards, r.terminal);
  }

  std::vector<std::array<int, 2>> agents() const {
    std::vector<std::array<int, 2>> out;
    for (const auto& p : env_->state().agents) out.push_back({p.row, p.col});
    return out;
  }

  const Environment& env() const { return *env_; }

 private:
  std::unique_ptr<Environment> env_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-agent deep Q-learning core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  auto usage = py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<SamplingGated>(m, "SamplingGated", usage.ptr());

  py::class_<PyEnvironment>(m, "Environment")
      .def(py::init<const std::string&, std::optional<int>, std::optional<double>, std::optional<bool>,
                    std::optional<int>, std::optional<int>, bool, int>(),
           py::arg("name") = "sync", py::arg("size") = py::none(), py::arg("reward") = py::none(),
           py::arg("cooperative") = py::none(), py::arg("boxes") = py::none(), py::arg("num_prey") = py::none(),
           py::arg("normalize") = true, py::arg("max_steps") = 100)
      .def("reset", &PyEnvironment::reset, py::arg("seed"), "Start an episode; returns one observation per agent.")
      .def("step", &PyEnvironment::step, py::arg("actions"), "Returns (next_obs, rewards, terminal).")
      .def("observe", [](const PyEnvironment& e, int agent) { return e.env().observe(agent); }, py::arg("agent"))
      .def("render", [](const PyEnvironment& e) { return e.env().render(); })
      .def_property_readonly("agents", &PyEnvironment::agents)
      .def_property_readonly("num_actions", [](const PyEnvironment& e) { return e.env().num_actions(); })
      .def_property_readonly("observation_dim", [](const PyEnvironment& e) { return e.env().observation_dim(); })
      .def_property_readonly("terminal", [](const PyEnvironment& e) { return e.env().terminal(); })
      .def_property_readonly("step_count", [](const PyEnvironment& e) { return e.env().state().step_count; });

  py::class_<NetworkParams>(m, "Network")
      .def_static(
          "create",
          [](const std::string& architecture, int input_dim, int output_dim, std::uint64_t seed, std::vector<int> hidden,
             int width, std::vector<int> self_indices, std::vector<int> other_indices) {
            NetworkSpec spec;
            spec.arch = architecture_from_name(architecture);
            spec.input_dim = input_dim;
            spec.output_dim = output_dim;
            spec.hidden = std::move(hidden);
            spec.self_width = spec.other_width = spec.joint_width = width;
            spec.self_indices = std::move(self_indices);
            spec.other_indices = std::move(other_indices);
            std::mt19937_64 rng(seed);
            return NetworkParams::glorot(spec, rng);
          },
          py::arg("architecture"), py::arg("input_dim"), py::arg("output_dim"), py::arg("seed") = 0,
          py::arg("hidden") = std::vector<int>{64, 64}, py::arg("width") = 32,
          py::arg("self_indices") = std::vector<int>{}, py::arg("other_indices") = std::vector<int>{},
          "Glorot-initialised network.")
      .def_static("from_json", [](const std::string& text) { return network_from_json(nlohmann::json::parse(text)); })
      .def("to_json", [](const NetworkParams& p) { return to_json(p).dump(); })
      .def("forward", [](const NetworkParams& p, std::vector<double> obs) { return forward(p, obs); }, py::arg("obs"))
      .def("forward_batch", [](const NetworkParams& p, const Eigen::MatrixXd& inputs) { return forward_batch(p, inputs); },
           py::arg("inputs"), "Inputs hold one observation per column.")
      .def("backward",
           [](const NetworkParams& p, const Eigen::MatrixXd& inputs, std::vector<int> actions, std::vector<double> targets) {
             const auto lg = backward(p, TrainingBatch{inputs, std::move(actions), std::move(targets)});
             return py::make_tuple(lg.loss, lg.gradient);
           },
           py::arg("inputs"), py::arg("actions"), py::arg("targets"), "Mean Huber loss and its gradient.")
      .def_property(
          "values", [](const NetworkParams& p) { return p.values(); },
          [](NetworkParams& p, const Eigen::VectorXd& v) {
            if (v.size() != p.size()) throw UsageError("parameter vector has the wrong length");
            p.values() = v;
          })
      .def_property_readonly("input_dim", &NetworkParams::input_dim)
      .def_property_readonly("output_dim", &NetworkParams::output_dim)
      .def("__eq__", &NetworkParams::operator==);

  m.def("huber_loss", [](double prediction, double target) {
    const auto h = huber_loss(prediction, target);
    return py::make_tuple(h.loss, h.grad);
  }, py::arg("prediction"), py::arg("target"), "Returns (loss, d loss / d prediction).");

  m.def("pure_nash", [](const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2, double tolerance) {
    std::vector<std::pair<int, int>> out;
    for (const Cell& c : pure_nash(as_pair(p1, p2), tolerance)) out.emplace_back(c.row, c.col);
    return out;
  }, py::arg("payoff_1"), py::arg("payoff_2"), py::arg("tolerance") = 0.0);

  m.def("select_nash_q",
        [](const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2, int agent, const std::string& tie_break,
           const std::string& no_nash) { return select_nash_q(as_pair(p1, p2), rules_from(tie_break, no_nash, 0.0), agent); },
        py::arg("payoff_1"), py::arg("payoff_2"), py::arg("agent"), py::arg("tie_break") = "max_sum",
        py::arg("no_nash") = "best_sum");

  m.def("select_friend", [](std::vector<double> q, int num_actions, int agent) { return select_friend(q, num_actions, agent); },
        py::arg("q"), py::arg("num_actions"), py::arg("agent"));

  m.def("select_set_controller", [](std::vector<double> q, int num_actions) {
    const auto j = select_set_controller(q, num_actions);
    return py::make_tuple(action_index(j.per_agent[0]), action_index(j.per_agent[1]));
  }, py::arg("q"), py::arg("num_actions"));

  m.def("epsilon_at", [](std::int64_t update, std::int64_t total_updates, double initial, double final_value, double fraction) {
    return epsilon_at(ExplorationSchedule{initial, final_value, fraction, total_updates}, update);
  }, py::arg("update"), py::arg("total_updates"), py::arg("initial") = 1.0, py::arg("final") = 0.1,
     py::arg("decay_fraction") = 0.75);

  m.def("normalize_config", [](const std::string& text) { return to_json(parse_config(text)).dump(); },
        py::arg("config_json"), "Parse and validate a JSON config; returns it with every default filled in.");

  m.def("train",
        [](const std::string& text, std::optional<std::filesystem::path> output_dir, py::object on_report) {
          RunOptions options;
          options.output_dir = std::move(output_dir);
          if (!on_report.is_none()) {
            options.on_report = [on_report](const EvalReport& r) {
              py::object keep = on_report(report_dict(r));
              return keep.is_none() || keep.cast<bool>();
            };
          }
          const auto result = run_training(parse_config(text), options);
          py::list reports;
          for (const auto& r : result.reports) reports.append(report_dict(r));
          return py::make_tuple(reports, result.networks);
        },
        py::arg("config_json"), py::arg("output_dir") = py::none(), py::arg("on_report") = py::none(),
        "Train from a JSON config. Returns (reports, networks). on_report may return False to stop early.");

  m.def("evaluate",
        [](const std::string& text, const std::vector<NetworkParams>& networks, int episodes, std::uint64_t seed) {
          return report_dict(evaluate(parse_config(text), networks, episodes, seed));
        },
        py::arg("config_json"), py::arg("networks"), py::arg("episodes") = 100, py::arg("seed") = 0);

  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    const Checkpoint ck = load_checkpoint(path);
    return py::make_tuple(to_json(ck.config).dump(), ck.updates, ck.networks);
  }, py::arg("path"), "Returns (config_json, updates, networks).");
}

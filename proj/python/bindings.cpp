#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hexmem/app/commands.hpp"
#include "hexmem/errors.hpp"
#include "hexmem/experiment.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/stats.hpp"
#include "hexmem/taskdb.hpp"

namespace py = pybind11;
using namespace hexmem;

namespace {

// Runs a command and returns what it printed.
template <typename Fn>
std::string capture(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hex-grid memory tasks, difficulty database, controllers and experiments";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::class_<HexGrid>(m, "HexGrid")
      .def(py::init<int, int>(), py::arg("rows") = 6, py::arg("cols") = 6)
      .def_property_readonly("rows", &HexGrid::rows)
      .def_property_readonly("cols", &HexGrid::cols)
      .def_property_readonly("cell_count", &HexGrid::cell_count)
      .def("neighbors",
           [](const HexGrid& g, CellIndex c) {
             const auto n = g.neighbors(c);
             return std::vector<CellIndex>(n.begin(), n.end());
           })
      .def("adjacent", &HexGrid::adjacent)
      .def("hop_distance", &HexGrid::hop_distance)
      .def("intermediate_count", &HexGrid::intermediate_count);

  py::class_<MemoryTask>(m, "MemoryTask")
      .def(py::init<std::vector<CellIndex>, int>(), py::arg("targets"), py::arg("cell_count") = 36)
      .def_static("parse", &MemoryTask::parse, py::arg("text"), py::arg("cell_count") = 36)
      .def_property_readonly("targets", &MemoryTask::targets)
      .def_property_readonly("mask", &MemoryTask::mask)
      .def("__len__", &MemoryTask::size)
      .def("__str__", &MemoryTask::to_string)
      .def("__repr__", [](const MemoryTask& t) { return "MemoryTask(" + t.to_string() + ")"; })
      .def("__eq__", [](const MemoryTask& a, const MemoryTask& b) { return a == b; });

  py::class_<TaskFeatures>(m, "TaskFeatures")
      .def_readonly("target_count", &TaskFeatures::target_count)
      .def_readonly("component_count", &TaskFeatures::component_count)
      .def_readonly("distribution_raw", &TaskFeatures::distribution_raw)
      .def_readonly("targets", &TaskFeatures::targets)
      .def_readonly("components", &TaskFeatures::components)
      .def_readonly("distribution", &TaskFeatures::distribution);

  py::class_<DifficultyModel>(m, "DifficultyModel")
      .def(py::init([](double wt, double wc, double wd) {
             return DifficultyModel(HexGrid(), DifficultyWeights{wt, wc, wd});
           }),
           py::arg("weight_targets") = 1.0 / 3.0, py::arg("weight_components") = 1.0 / 3.0,
           py::arg("weight_distribution") = 1.0 / 3.0)
      .def("features", &DifficultyModel::features)
      .def("difficulty", py::overload_cast<const MemoryTask&>(&DifficultyModel::difficulty,
                                                              py::const_))
      .def_property_readonly("fingerprint", &DifficultyModel::fingerprint);

  py::class_<TrialOutcome>(m, "TrialOutcome")
      .def_readonly("clicks", &TrialOutcome::clicks)
      .def_readonly("hits", &TrialOutcome::hits)
      .def_readonly("correct", &TrialOutcome::correct)
      .def_readonly("score", &TrialOutcome::score)
      .def_readonly("win", &TrialOutcome::win);
  m.def(
      "score_trial",
      [](const MemoryTask& task, const std::vector<CellIndex>& clicks) {
        return score_trial(task, clicks);
      },
      py::arg("task"), py::arg("clicks"));
  m.def("total_task_count", &total_task_count, py::arg("min_targets") = 4,
        py::arg("max_targets") = 14, py::arg("cell_count") = 36);

  py::class_<DatabaseEntry>(m, "DatabaseEntry")
      .def_readonly("id", &DatabaseEntry::id)
      .def_readonly("difficulty", &DatabaseEntry::difficulty)
      .def_property_readonly("task",
                             [](const DatabaseEntry& e) { return MemoryTask::from_mask(e.id); });

  py::class_<TaskDatabase>(m, "TaskDatabase")
      .def_static(
          "build",
          [](const DifficultyModel& model, std::size_t per_stratum, std::uint64_t seed) {
            BuildOptions o;
            o.per_stratum = per_stratum;
            o.seed = seed;
            py::gil_scoped_release release;
            return TaskDatabase::build(model, o);
          },
          py::arg("model"), py::arg("per_stratum") = 20000, py::arg("seed") = 0)
      .def_static("load", &TaskDatabase::load, py::arg("path"), py::arg("fingerprint"))
      .def("save", &TaskDatabase::save)
      .def("__len__", &TaskDatabase::size)
      .def_property_readonly("fingerprint", &TaskDatabase::fingerprint)
      .def(
          "lookup",
          [](const TaskDatabase& db, double difficulty, std::uint64_t seed) {
            Rng rng = make_rng(seed);
            return db.lookup(difficulty, ExclusionWindow(0), rng);
          },
          py::arg("difficulty"), py::arg("seed") = 0);

  m.def(
      "reward",
      [](const std::string& kind, double score, double difficulty, double r3_constant) {
        const rl::RewardSpec spec{rl::parse_reward_kind(kind), r3_constant};
        return rl::reward(spec, score, difficulty);
      },
      py::arg("kind"), py::arg("score"), py::arg("difficulty") = 0.0,
      py::arg("r3_constant") = 0.35);

  m.def("paired_t_test", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto t = stats::paired_t_test(x, y);
    return py::make_tuple(t.t, t.df);
  });
  m.def("pearson_r", [](const std::vector<double>& x, const std::vector<double>& y) {
    return stats::pearson_r(x, y);
  });

  m.def(
      "task_difficulty",
      [](const std::string& cells) {
        return capture([&](std::ostream& out) { app::task_difficulty(cells, out); });
      },
      py::arg("cells"));

  m.def(
      "simulate",
      [](const std::filesystem::path& out, std::size_t cohort, const std::string& methods,
         std::uint64_t seed, std::optional<std::filesystem::path> policy,
         std::optional<std::filesystem::path> db, double fatigue, std::uint64_t train_steps) {
        app::SimulateArgs args;
        args.out = out;
        args.cohort = cohort;
        args.methods = app::parse_methods(methods);
        args.seed = seed;
        args.policy = std::move(policy);
        args.db = std::move(db);
        args.fatigue = fatigue;
        args.train_steps = train_steps;
        py::gil_scoped_release release;
        return capture([&](std::ostream& o) { app::simulate(args, o); });
      },
      py::arg("out"), py::arg("cohort") = 52, py::arg("methods") = "rl,rule1,rule2",
      py::arg("seed") = 0, py::arg("policy") = py::none(), py::arg("db") = py::none(),
      py::arg("fatigue") = 0.004, py::arg("train_steps") = 200000);

  m.def(
      "train",
      [](const std::filesystem::path& out, const std::string& reward, std::uint64_t steps,
         std::uint64_t seed, std::optional<double> ability,
         std::optional<std::filesystem::path> db) {
        app::TrainArgs args;
        args.out = out;
        args.reward = rl::parse_reward_kind(reward);
        args.steps = steps;
        args.seed = seed;
        args.ability = ability;
        args.db = std::move(db);
        py::gil_scoped_release release;
        return capture([&](std::ostream& o) { app::train(args, o); });
      },
      py::arg("out"), py::arg("reward") = "r1", py::arg("steps") = 200000, py::arg("seed") = 0,
      py::arg("ability") = py::none(), py::arg("db") = py::none());
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hexmem/controllers.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/taskdb.hpp"
#include "hexmem/taskmodel.hpp"

// Implementations behind the `hexmem` command-line tool. Each command writes
// human-readable progress to `out` and throws on failure.
namespace hexmem::app {

// Database from `path`, or a default-size database built with seed 0.
TaskDatabase open_database(const DifficultyModel& model,
                           const std::optional<std::filesystem::path>& path);

struct DdbBuildArgs {
  std::size_t per_stratum = 20000;
  std::uint64_t seed = 0;
  double targeted_fraction = 0.25;
  std::filesystem::path out;
};
void ddb_build(const DdbBuildArgs& args, std::ostream& out);

struct DdbQueryArgs {
  double difficulty = 0.5;
  std::optional<std::filesystem::path> db;
  std::uint64_t seed = 0;  // picks among equally close entries
};
void ddb_query(const DdbQueryArgs& args, std::ostream& out);

// Prints n_t, n_c, d and difficulty of a comma-separated cell list.
void task_difficulty(const std::string& cells, std::ostream& out);

struct TrainArgs {
  rl::RewardKind reward = rl::RewardKind::kR1;
  std::uint64_t steps = 200000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<std::filesystem::path> curve;
  std::optional<std::filesystem::path> db;
  // Train against one player of this ability instead of a cohort.
  std::optional<double> ability;
  std::size_t cohort = 52;
  double ability_low = 0.2;
  double ability_high = 0.9;
  int eval_trials = 100;
};
void train(const TrainArgs& args, std::ostream& out);

struct FineTuneArgs {
  std::filesystem::path logs;
  std::filesystem::path policy;
  std::filesystem::path out;
  rl::RewardKind reward = rl::RewardKind::kR1;
  std::uint64_t seed = 0;
};
void fine_tune(const FineTuneArgs& args, std::ostream& out);

struct SimulateArgs {
  std::size_t cohort = 52;
  std::vector<ControllerKind> methods{ControllerKind::kRl, ControllerKind::kRule1,
                                      ControllerKind::kRule2};
  std::uint64_t seed = 0;
  std::filesystem::path out;
  // Policy for the rl method. Without one a policy is trained first, on a
  // fatigue-free cohort over the same ability range.
  std::optional<std::filesystem::path> policy;
  std::uint64_t train_steps = 200000;
  std::optional<std::filesystem::path> db;
  int trials = 20;
  double ability_low = 0.2;
  double ability_high = 0.9;
  double fatigue = 0.004;
  double learning = 0.0;
  rl::RewardKind reward = rl::RewardKind::kR1;
  bool write_sessions = true;
};
void simulate(const SimulateArgs& args, std::ostream& out);

std::vector<ControllerKind> parse_methods(const std::string& list);

}  // namespace hexmem::app

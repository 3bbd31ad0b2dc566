#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "hexmem/random.hpp"
#include "hexmem/rl/policy.hpp"
#include "hexmem/score_bands.hpp"
#include "hexmem/taskdb.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem {

enum class ControllerKind {
  kRl,     // PPO policy on the continuous metric
  kRule1,  // staircase on the number of targets
  kRule2,  // staircase on the continuous metric
};

std::string to_string(ControllerKind kind);
ControllerKind parse_controller_kind(std::string_view name);

struct ControllerConfig {
  double high_score = kHighScore;
  double low_score = kLowScore;
  int target_step = 1;
  double difficulty_step = 0.1;
  int initial_targets = 9;          // midpoint of 4..14
  double initial_difficulty = 0.5;  // midpoint of [0, 1]
  std::size_t exclusion_window = ExclusionWindow::kDefaultCapacity;
  LookupOptions lookup;

  void validate() const;
};

struct ControllerState {
  ControllerKind kind = ControllerKind::kRule2;
  double difficulty = 0.5;  // requested difficulty (kRl, kRule2)
  int target_count = 9;     // requested n_t (kRule1)
  int trial_count = 0;      // tasks selected so far
  ExclusionWindow exclusions;
  double last_task_difficulty = 0.0;
  // Policy output behind `difficulty` (kRl after the first trial).
  std::optional<double> raw_action;
  std::optional<double> log_prob;
};

struct SelectedTask {
  MemoryTask task;
  double difficulty = 0.0;  // metric value of the returned task
};

class Controller {
 public:
  // Throws ConfigError for kRl without a policy.
  Controller(ControllerKind kind, ControllerConfig config = {},
             std::shared_ptr<const rl::PolicyParams> policy = nullptr);

  ControllerKind kind() const { return kind_; }
  const ControllerConfig& config() const { return config_; }

  ControllerState init() const;

  // Applies the adjustment rule after a trial with `last_score`. The RL
  // controller queries its policy deterministically on
  // (last task difficulty, last_score).
  void next_difficulty(ControllerState& state, double last_score) const;

  // Rule1 draws a uniform random target set of the current size; the others
  // query the database at the current difficulty, honouring and updating
  // the session's exclusion window.
  SelectedTask select_task(ControllerState& state, const TaskDatabase& db,
                           const DifficultyModel& model, Rng& rng) const;

 private:
  ControllerKind kind_;
  ControllerConfig config_;
  std::shared_ptr<const rl::PolicyParams> policy_;
};

}  // namespace hexmem

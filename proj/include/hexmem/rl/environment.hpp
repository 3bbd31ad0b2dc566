#pragma once

#include <functional>
#include <optional>

#include "hexmem/random.hpp"
#include "hexmem/rl/policy.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/taskdb.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem::rl {

// Produces the player's recall for a task. trial_index is 0-based within
// the session. Adapts simulated players and live human responses alike.
using Responder =
    std::function<TrialOutcome(const MemoryTask& task, double difficulty, int trial_index)>;

struct EnvConfig {
  int trials_per_episode = 20;
  double initial_difficulty = 0.5;
  RewardSpec reward;
  LookupOptions lookup;
  std::size_t exclusion_window = ExclusionWindow::kDefaultCapacity;
};

struct TrialResult {
  int trial = 0;  // 1-based
  MemoryTask task;
  double requested_difficulty = 0.0;
  double actual_difficulty = 0.0;
  TrialOutcome outcome;
  double reward = 0.0;
};

struct StepResult {
  RLState state;  // (achieved difficulty, score) of the trial just played
  double reward = 0.0;
  bool done = false;
  TrialResult trial;
};

// A single adaptive session viewed as an episode. reset() plays the first
// trial at the initial difficulty; every step() plays one more trial at the
// requested difficulty. The episode is done after trials_per_episode trials.
class DdaEnvironment {
 public:
  DdaEnvironment(const DifficultyModel& model, const TaskDatabase& db, EnvConfig config = {});

  RLState reset(Responder responder, std::uint64_t seed);
  // Throws StateError when the episode is exhausted or was never reset.
  StepResult step(double requested_difficulty);

  bool done() const { return trials_played_ >= config_.trials_per_episode; }
  int trials_played() const { return trials_played_; }
  const RLState& state() const { return state_; }
  const TrialResult& last_trial() const { return last_; }
  const EnvConfig& config() const { return config_; }

 private:
  TrialResult play(double requested_difficulty);

  const DifficultyModel* model_;
  const TaskDatabase* db_;
  EnvConfig config_;
  Responder responder_;
  Rng rng_;
  ExclusionWindow exclusions_;
  RLState state_;
  TrialResult last_;
  int trials_played_ = 0;
  bool active_ = false;
};

}  // namespace hexmem::rl

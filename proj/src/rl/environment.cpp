#include "hexmem/rl/environment.hpp"

#include <algorithm>

#include "hexmem/errors.hpp"

namespace hexmem::rl {

DdaEnvironment::DdaEnvironment(const DifficultyModel& model, const TaskDatabase& db,
                               EnvConfig config)
    : model_(&model), db_(&db), config_(config), exclusions_(config.exclusion_window) {
  if (config_.trials_per_episode < 1) throw ConfigError("episodes need at least one trial");
}

RLState DdaEnvironment::reset(Responder responder, std::uint64_t seed) {
  responder_ = std::move(responder);
  rng_ = make_rng(seed, 0xe11f);
  exclusions_ = ExclusionWindow(config_.exclusion_window);
  trials_played_ = 0;
  active_ = true;
  last_ = play(config_.initial_difficulty);
  state_ = RLState{last_.actual_difficulty, last_.outcome.score};
  return state_;
}

StepResult DdaEnvironment::step(double requested_difficulty) {
  if (!active_) throw StateError("environment stepped before reset");
  if (done()) throw StateError("episode already finished");
  last_ = play(std::clamp(requested_difficulty, 0.0, 1.0));
  state_ = RLState{last_.actual_difficulty, last_.outcome.score};
  return StepResult{state_, last_.reward, done(), last_};
}

TrialResult DdaEnvironment::play(double requested_difficulty) {
  TrialResult r;
  r.trial = trials_played_ + 1;
  const DatabaseEntry entry =
      db_->lookup(requested_difficulty, exclusions_, rng_, config_.lookup);
  exclusions_.push(entry.id);
  r.task = MemoryTask::from_mask(entry.id, model_->grid().cell_count());
  r.requested_difficulty = requested_difficulty;
  r.actual_difficulty = entry.difficulty;
  r.outcome = responder_(r.task, r.actual_difficulty, trials_played_);
  r.reward = reward(config_.reward, r.outcome.score, r.actual_difficulty);
  ++trials_played_;
  return r;
}

}  // namespace hexmem::rl

#include "hexmem/controllers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "hexmem/errors.hpp"

namespace hexmem {

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kRl: return "rl";
    case ControllerKind::kRule1: return "rule1";
    case ControllerKind::kRule2: return "rule2";
  }
  return "?";
}

ControllerKind parse_controller_kind(std::string_view name) {
  if (name == "rl") return ControllerKind::kRl;
  if (name == "rule1") return ControllerKind::kRule1;
  if (name == "rule2") return ControllerKind::kRule2;
  throw ConfigError("unknown method \"" + std::string(name) + "\" (expected rl, rule1 or rule2)");
}

void ControllerConfig::validate() const {
  if (!(low_score < high_score)) throw ConfigError("low score threshold must be below high");
  if (target_step <= 0 || !(difficulty_step > 0.0)) {
    throw ConfigError("controller steps must be positive");
  }
  if (initial_targets < MemoryTask::kMinTargets || initial_targets > MemoryTask::kMaxTargets) {
    throw ConfigError("initial target count outside 4..14");
  }
  if (!(initial_difficulty >= 0.0 && initial_difficulty <= 1.0)) {
    throw ConfigError("initial difficulty outside [0, 1]");
  }
}

Controller::Controller(ControllerKind kind, ControllerConfig config,
                       std::shared_ptr<const rl::PolicyParams> policy)
    : kind_(kind), config_(config), policy_(std::move(policy)) {
  config_.validate();
  if (kind_ == ControllerKind::kRl && !policy_) {
    throw ConfigError("the RL controller needs a trained policy");
  }
}

ControllerState Controller::init() const {
  ControllerState s;
  s.kind = kind_;
  s.difficulty = config_.initial_difficulty;
  s.target_count = config_.initial_targets;
  s.exclusions = ExclusionWindow(config_.exclusion_window);
  return s;
}

namespace {

// Rule-2 levels are kept on a 1e-12 grid so repeated +/-0.1 steps land on
// the expected decimals.
double snap(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

void Controller::next_difficulty(ControllerState& state, double last_score) const {
  if (!(last_score >= 0.0 && last_score <= 1.0)) {
    throw DomainError("score must lie in [0, 1]");
  }
  const int direction = last_score > config_.high_score   ? +1
                        : last_score < config_.low_score ? -1
                                                         : 0;
  switch (kind_) {
    case ControllerKind::kRule1:
      state.target_count = std::clamp(state.target_count + direction * config_.target_step,
                                      MemoryTask::kMinTargets, MemoryTask::kMaxTargets);
      break;
    case ControllerKind::kRule2:
      state.difficulty =
          std::clamp(snap(state.difficulty + direction * config_.difficulty_step), 0.0, 1.0);
      break;
    case ControllerKind::kRl: {
      const rl::RLState obs{state.last_task_difficulty, last_score};
      const rl::ActionSample a = rl::act(*policy_, obs, rl::ActMode::kDeterministic);
      state.difficulty = a.action;
      state.raw_action = a.raw;
      state.log_prob = a.log_prob;
      break;
    }
  }
}

SelectedTask Controller::select_task(ControllerState& state, const TaskDatabase& db,
                                     const DifficultyModel& model, Rng& rng) const {
  const int cells = model.grid().cell_count();
  SelectedTask out;
  if (kind_ == ControllerKind::kRule1) {
    std::array<CellIndex, 64> pool{};
    std::iota(pool.begin(), pool.begin() + cells, 0);
    std::vector<CellIndex> targets;
    for (int i = 0; i < state.target_count; ++i) {
      const auto j = i + static_cast<int>(uniform_index(rng, cells - i));
      std::swap(pool[i], pool[j]);
      targets.push_back(pool[i]);
    }
    out.task = MemoryTask(std::move(targets), cells);
    out.difficulty = model.difficulty(out.task);
  } else {
    const DatabaseEntry entry = db.lookup(state.difficulty, state.exclusions, rng, config_.lookup);
    out.task = MemoryTask::from_mask(entry.id, cells);
    out.difficulty = entry.difficulty;
  }
  state.exclusions.push(out.task.mask());
  state.last_task_difficulty = out.difficulty;
  ++state.trial_count;
  return out;
}

}  // namespace hexmem

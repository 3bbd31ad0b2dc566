#include "hexmem/simplayer.hpp"

#include <algorithm>
#include <cmath>

#include "hexmem/errors.hpp"

namespace hexmem {

void PlayerParams::validate() const {
  if (!(ability >= 0.0 && ability <= 1.0)) throw DomainError("ability must lie in [0, 1]");
  if (!(slope > 0.0)) throw DomainError("psychometric slope must be positive");
  if (!(lapse >= 0.0 && lapse < 1.0)) throw DomainError("lapse must lie in [0, 1)");
}

SimPlayer::SimPlayer(PlayerParams params, std::uint64_t seed, int id)
    : params_(params), seed_(seed), id_(id), rng_(make_rng(seed)) {
  params_.validate();
}

void SimPlayer::reseed(std::uint64_t seed) {
  seed_ = seed;
  rng_ = make_rng(seed);
}

double SimPlayer::effective_ability(int trial_index) const {
  const double drift = (params_.learning_rate - params_.fatigue_rate) * trial_index;
  return std::clamp(params_.ability + drift, 0.0, 1.0);
}

double SimPlayer::recall_probability(double task_difficulty, int trial_index) const {
  const double z = (effective_ability(trial_index) - task_difficulty) / params_.slope;
  const double logistic = 1.0 / (1.0 + std::exp(-z));
  return params_.lapse + (1.0 - params_.lapse) * logistic;
}

TrialOutcome SimPlayer::respond(const MemoryTask& task, double task_difficulty,
                                int trial_index, int cell_count) {
  if (trial_index < 0) throw DomainError("trial index must be nonnegative");
  const double p = recall_probability(task_difficulty, trial_index);

  std::vector<CellIndex> clicks;
  clicks.reserve(task.size());
  int missed = 0;
  for (CellIndex target : task.targets()) {
    if (bernoulli(rng_, p)) {
      clicks.push_back(target);
    } else {
      ++missed;
    }
  }
  std::vector<CellIndex> decoys;
  for (CellIndex c = 0; c < cell_count; ++c) {
    if (!task.contains(c)) decoys.push_back(c);
  }
  for (int i = 0; i < missed; ++i) {
    const auto j = i + uniform_index(rng_, decoys.size() - i);
    std::swap(decoys[i], decoys[j]);
    clicks.push_back(decoys[i]);
  }
  shuffle(clicks.begin(), clicks.end(), rng_);
  return score_trial(task, clicks, cell_count);
}

std::vector<SimPlayer> make_cohort(const CohortSpec& spec) {
  if (spec.size < 1) throw DomainError("cohort size must be at least 1");
  if (spec.ability_low > spec.ability_high) {
    throw DomainError("cohort ability range is inverted");
  }
  Rng rng = make_rng(spec.seed, 0xc0407);
  std::vector<SimPlayer> cohort;
  cohort.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    PlayerParams params = spec.base;
    if (spec.evenly_spaced) {
      params.ability = spec.size == 1
                           ? 0.5 * (spec.ability_low + spec.ability_high)
                           : spec.ability_low + (spec.ability_high - spec.ability_low) *
                                                    static_cast<double>(i) / (spec.size - 1);
    } else {
      params.ability =
          spec.ability_low + (spec.ability_high - spec.ability_low) * uniform01(rng);
    }
    cohort.emplace_back(params, derive_seed(spec.seed, i + 1), static_cast<int>(i));
  }
  return cohort;
}

}  // namespace hexmem

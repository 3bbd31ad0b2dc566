#pragma once

#include <cstdint>
#include <vector>

#include "hexmem/random.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem {

struct PlayerParams {
  double ability = 0.5;        // theta in [0, 1]
  double slope = 0.15;         // logistic width w > 0
  double lapse = 0.05;         // guess floor g in [0, 1)
  double learning_rate = 0.0;  // ability gain per trial
  double fatigue_rate = 0.0;   // ability loss per trial

  void validate() const;
};

// Logistic psychometric player. Each target is recalled independently with
//   p = g + (1 - g) * logistic((theta_t - difficulty) / w),
//   theta_t = clamp(theta + (learning - fatigue) * trial_index, 0, 1).
// Missed targets are replaced by random wrong cells so the player always
// clicks exactly n_t distinct cells.
class SimPlayer {
 public:
  SimPlayer(PlayerParams params, std::uint64_t seed, int id = 0);

  const PlayerParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  int id() const { return id_; }

  double effective_ability(int trial_index) const;
  double recall_probability(double task_difficulty, int trial_index) const;

  // Consumes randomness from the player's own stream.
  TrialOutcome respond(const MemoryTask& task, double task_difficulty,
                       int trial_index, int cell_count = 36);

  // Restart the random stream, e.g. at the start of a new session.
  void reseed(std::uint64_t seed);

 private:
  PlayerParams params_;
  std::uint64_t seed_;
  int id_;
  Rng rng_;
};

struct CohortSpec {
  std::size_t size = 52;
  double ability_low = 0.2;
  double ability_high = 0.9;
  bool evenly_spaced = true;  // false: abilities sampled uniformly
  std::uint64_t seed = 0;
  PlayerParams base;          // ability field ignored
};

std::vector<SimPlayer> make_cohort(const CohortSpec& spec);

}  // namespace hexmem

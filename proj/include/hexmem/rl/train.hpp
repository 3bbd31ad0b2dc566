#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hexmem/rl/environment.hpp"
#include "hexmem/rl/policy.hpp"
#include "hexmem/rl/ppo.hpp"
#include "hexmem/session_log.hpp"
#include "hexmem/simplayer.hpp"

namespace hexmem::rl {

struct TrainConfig {
  std::uint64_t total_steps = 200000;  // environment transitions
  std::uint64_t seed = 0;
  PPOConfig ppo;
  EnvConfig env;
  NetworkShape shape;
  double initial_log_std = -1.5;
  // Written after every update when set.
  std::optional<std::filesystem::path> checkpoint_path;
};

struct CurvePoint {
  int update = 0;
  std::uint64_t steps = 0;
  double mean_reward = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
};

// Alternates rollouts over randomly drawn cohort players with PPO updates
// until the step budget is spent. Deterministic for a given seed.
TrainResult train(const DifficultyModel& model, const TaskDatabase& db,
                  std::span<const SimPlayer> cohort, const TrainConfig& config,
                  const PolicyParams* initial = nullptr);

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

struct EvaluationResult {
  double mean_score = 0.0;
  double mean_difficulty = 0.0;
  double mean_reward = 0.0;
  int trials = 0;
};

// Deterministic-mode rollouts until `policy_trials` policy-chosen trials have
// been played. The fixed initial trial of each session is not counted.
EvaluationResult evaluate_policy(const PolicyParams& params, const DifficultyModel& model,
                                 const TaskDatabase& db, const SimPlayer& player,
                                 const EnvConfig& env, int policy_trials,
                                 std::uint64_t seed);

struct Checkpoint {
  PolicyParams params;
  PPOConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const PPOConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds PPO samples from logged RL sessions, recomputing rewards with
// `reward_spec` and values with the current critic. Sessions of other
// methods are ignored. Throws FormatError when an RL trial lacks its stored
// raw action or log probability.
std::vector<Sample> samples_from_logs(const PolicyParams& params,
                                      std::span<const SessionLog> logs,
                                      const RewardSpec& reward_spec, const PPOConfig& cfg,
                                      int trials_per_session = 20);

struct FineTuneResult {
  PolicyParams params;
  std::size_t samples = 0;
  std::optional<UpdateMetrics> metrics;
};

// Off-policy PPO passes over logged sessions. Ratios use the stored log
// probabilities. An empty log set leaves the parameters unchanged.
FineTuneResult fine_tune_from_logs(const PolicyParams& params,
                                   std::span<const SessionLog> logs, const PPOConfig& cfg,
                                   const RewardSpec& reward_spec, std::uint64_t seed);

}  // namespace hexmem::rl

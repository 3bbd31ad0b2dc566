#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hexmem/controllers.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/session_log.hpp"
#include "hexmem/simplayer.hpp"
#include "hexmem/stats.hpp"

namespace hexmem {

struct SessionOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  rl::RewardSpec reward;  // reward recorded alongside every trial
};

// One adaptive session: init controller, then per trial select a task, let
// the player respond, score it and update the controller. Reseeds the
// player's stream from options.seed unless `keep_player_stream` is set.
SessionLog run_session(const Controller& controller, SimPlayer& player,
                       const TaskDatabase& db, const DifficultyModel& model,
                       const SessionOptions& options, bool keep_player_stream = false);

struct PairedComparison {
  std::string factor;  // "score" or "decline"
  ControllerKind first;
  ControllerKind second;
  stats::TTest test;
};

struct ExperimentReport {
  std::vector<ControllerKind> methods;
  std::vector<int> player_ids;
  std::vector<double> abilities;
  // [method][subject]: mean session score (Avg_{s,m}).
  std::vector<std::vector<double>> avg_subject;
  // [method][trial]: mean score / task difficulty across subjects (Avg_{t,m}).
  std::vector<std::vector<double>> avg_trial;
  std::vector<std::vector<double>> avg_trial_difficulty;
  // [method][subject]: fraction of won trials.
  std::vector<std::vector<double>> win_rate_subject;
  // [method][subject]: Pearson r of score against trial number; nullopt when
  // the session's scores are constant.
  std::vector<std::vector<std::optional<double>>> decline;
  std::vector<PairedComparison> tests;
  std::vector<SessionLog> sessions;

  std::size_t method_index(ControllerKind kind) const;
  double mean_score(ControllerKind kind) const;
  double win_rate(ControllerKind kind) const;
  // Undefined correlations count as 0 (no trend).
  std::vector<double> decline_values(ControllerKind kind) const;
  double mean_decline(ControllerKind kind) const;
  const PairedComparison* find_test(const std::string& factor, ControllerKind a,
                                    ControllerKind b) const;
};

struct ExperimentOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  rl::RewardSpec reward;
  ControllerConfig controller;
  bool keep_sessions = true;
};

// Every player plays every method, in an order shuffled per player. The
// player's random stream carries over between their sessions; the fatigue
// clock restarts with each session.
ExperimentReport run_cohort_experiment(std::span<const ControllerKind> methods,
                                       std::span<const SimPlayer> cohort,
                                       const TaskDatabase& db, const DifficultyModel& model,
                                       std::shared_ptr<const rl::PolicyParams> policy,
                                       const ExperimentOptions& options);

// avg_subject_method.csv, avg_trial_method.csv, decline.csv, tests.csv,
// summary.csv and, when sessions were kept, sessions/<id>.jsonl.
void write_report(const ExperimentReport& report, const std::filesystem::path& directory);

}  // namespace hexmem

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hexmem/hexgrid.hpp"

namespace hexmem {

// A set of target cells to memorize. Targets are kept sorted.
class MemoryTask {
 public:
  static constexpr int kMinTargets = 4;
  static constexpr int kMaxTargets = 14;
  static constexpr int kStrataCount = kMaxTargets - kMinTargets + 1;

  MemoryTask() = default;
  // Throws DomainError on duplicates, out-of-range cells or a target count
  // outside [kMinTargets, kMaxTargets].
  MemoryTask(std::vector<CellIndex> targets, int cell_count = 36);

  static MemoryTask from_mask(CellMask mask, int cell_count = 36);
  // Parses "0,5,9,14" (whitespace tolerated).
  static MemoryTask parse(std::string_view text, int cell_count = 36);

  const std::vector<CellIndex>& targets() const { return targets_; }
  CellMask mask() const { return mask_; }
  int size() const { return static_cast<int>(targets_.size()); }
  bool contains(CellIndex cell) const {
    return cell >= 0 && cell < 64 && ((mask_ >> cell) & 1);
  }
  std::string to_string() const;

  friend bool operator==(const MemoryTask& a, const MemoryTask& b) {
    return a.mask_ == b.mask_;
  }

 private:
  std::vector<CellIndex> targets_;
  CellMask mask_ = 0;
};

struct TaskFeatures {
  int target_count = 0;      // n_t
  int component_count = 0;   // n_c
  int distribution_raw = 0;  // sum of pairwise intermediate counts
  double targets = 0.0;      // (n_t - 4) / 10
  double components = 0.0;   // (n_c - 1) / 13
  double distribution = 0.0; // distribution_raw / (pairs * D_max)
};

struct DifficultyWeights {
  double targets = 1.0 / 3.0;
  double components = 1.0 / 3.0;
  double distribution = 1.0 / 3.0;

  // Throws ConfigError unless all weights are nonnegative and sum to 1.
  void validate() const;
};

// Connected components of the subgraph induced by `mask` under hex adjacency.
int count_components(const HexGrid& grid, CellMask mask);

TaskFeatures extract_features(const HexGrid& grid, const DistanceTable& table,
                              const MemoryTask& task);

// Weighted sum of the normalized features.
double linear_difficulty(const TaskFeatures& features,
                         const DifficultyWeights& weights);

// Range of the weighted feature sum over every valid task, used to stretch
// the metric onto [0, 1]. Per-stratum bounds are indexed by n_t - 4.
struct DifficultyCalibration {
  double low = 0.0;
  double high = 1.0;
  std::array<double, MemoryTask::kStrataCount> stratum_low{};
  std::array<double, MemoryTask::kStrataCount> stratum_high{};
};

DifficultyCalibration calibrate(const HexGrid& grid, const DistanceTable& table,
                                const DifficultyWeights& weights);

// Continuous task difficulty in [0, 1]:
//   clamp((linear_difficulty - low) / (high - low), 0, 1)
class DifficultyModel {
 public:
  explicit DifficultyModel(HexGrid grid = HexGrid(),
                           DifficultyWeights weights = {});

  const HexGrid& grid() const { return grid_; }
  const DistanceTable& table() const { return table_; }
  const DifficultyWeights& weights() const { return weights_; }
  const DifficultyCalibration& calibration() const { return calibration_; }

  TaskFeatures features(const MemoryTask& task) const {
    return extract_features(grid_, table_, task);
  }
  double normalize(double linear) const;
  double difficulty(const TaskFeatures& features) const {
    return normalize(linear_difficulty(features, weights_));
  }
  double difficulty(const MemoryTask& task) const {
    return difficulty(features(task));
  }

  // Identifies the metric (grid shape, weights, calibration). Databases built
  // under one fingerprint are rejected by models with another.
  std::uint64_t fingerprint() const;

 private:
  HexGrid grid_;
  DistanceTable table_;
  DifficultyWeights weights_;
  DifficultyCalibration calibration_;
};

struct TrialOutcome {
  std::vector<CellIndex> clicks;
  std::vector<bool> hits;  // hits[i]: clicks[i] is a target
  int correct = 0;
  double score = 0.0;
  bool win = false;
};

// Throws ProtocolError when clicks are not exactly n_t distinct valid cells.
TrialOutcome score_trial(const MemoryTask& task,
                         std::span<const CellIndex> clicks,
                         int cell_count = 36);

// Newline-delimited task fixtures; one sorted comma-separated record per
// line, blank lines and '#' comments skipped.
std::vector<MemoryTask> read_task_fixture(std::istream& in, int cell_count = 36);
void write_task_fixture(std::ostream& out, std::span<const MemoryTask> tasks);

}  // namespace hexmem

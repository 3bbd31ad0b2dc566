#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <vector>

#include "hexmem/random.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem {

// Number of distinct target sets with n_min..n_max targets on a 36-cell grid,
// i.e. the sum of C(36, k). Exact; no enumeration.
std::uint64_t total_task_count(int n_min, int n_max, int cell_count = 36);
std::uint64_t binomial(int n, int k);

using TaskId = CellMask;  // a task is identified by its target bitmask

// Most recent task ids handed to one session. Owned by the caller.
class ExclusionWindow {
 public:
  static constexpr std::size_t kDefaultCapacity = 10;

  explicit ExclusionWindow(std::size_t capacity = kDefaultCapacity)
      : capacity_(capacity) {}

  void push(TaskId id);
  bool contains(TaskId id) const;
  std::size_t capacity() const { return capacity_; }
  const std::deque<TaskId>& ids() const { return ids_; }

 private:
  std::size_t capacity_;
  std::deque<TaskId> ids_;
};

struct DatabaseEntry {
  TaskId id = 0;
  double difficulty = 0.0;
};

struct BuildOptions {
  std::size_t per_stratum = 20000;
  std::uint64_t seed = 0;
  // Share of each stratum filled by difficulty-targeted local search rather
  // than uniform sampling, so that the tails of the stratum's difficulty
  // range are represented.
  double targeted_fraction = 0.25;
};

struct LookupOptions {
  double tolerance = 0.01;
};

// Difficulty-indexed store of tasks, stratified by target count.
class TaskDatabase {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  TaskDatabase() = default;

  // Throws DomainError if per_stratum exceeds the number of distinct tasks
  // in some stratum.
  static TaskDatabase build(const DifficultyModel& model, const BuildOptions& options);

  // Assemble from explicit entries (sorted internally). Difficulties are
  // stored with the same fixed-point precision as the file format.
  static TaskDatabase from_entries(std::vector<DatabaseEntry> entries,
                                   std::uint64_t fingerprint, std::uint64_t seed = 0);

  void save(const std::filesystem::path& path) const;
  // Throws ConfigError when the file was built under a different metric.
  static TaskDatabase load(const std::filesystem::path& path,
                           std::uint64_t expected_fingerprint);

  // Task with difficulty within tolerance of target (uniform among the
  // qualifying non-excluded entries), else the nearest non-excluded entry.
  // Throws StateError if nothing is available.
  DatabaseEntry lookup(double target_difficulty, const ExclusionWindow& exclusions,
                       Rng& rng, const LookupOptions& options = {}) const;

  // Entries of stratum n_t - 4, sorted by difficulty.
  const std::vector<DatabaseEntry>& stratum(int target_count) const;
  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }
  const std::vector<DatabaseEntry>& entries_by_difficulty() const { return sorted_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const TaskDatabase&, const TaskDatabase&);

 private:
  void index();

  std::array<std::vector<DatabaseEntry>, MemoryTask::kStrataCount> strata_;
  std::vector<DatabaseEntry> sorted_;
  std::uint64_t fingerprint_ = 0;
  std::uint64_t seed_ = 0;
};

bool operator==(const DatabaseEntry& a, const DatabaseEntry& b);

// Fixed-point quantization used by the on-disk format.
std::uint32_t encode_difficulty(double difficulty);
double decode_difficulty(std::uint32_t fixed);

}  // namespace hexmem

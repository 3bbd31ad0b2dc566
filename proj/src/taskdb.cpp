#include "hexmem/taskdb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "binary_io.hpp"
#include "hexmem/errors.hpp"

namespace hexmem {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    // Exact at every step: result * (n - k + i) is divisible by i.
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return static_cast<std::uint64_t>(result);
}

std::uint64_t total_task_count(int n_min, int n_max, int cell_count) {
  if (n_min < 0 || n_min > n_max || n_max > cell_count) {
    throw DomainError("task-count range must satisfy 0 <= n_min <= n_max <= cells");
  }
  std::uint64_t total = 0;
  for (int k = n_min; k <= n_max; ++k) total += binomial(cell_count, k);
  return total;
}

void ExclusionWindow::push(TaskId id) {
  if (capacity_ == 0) return;
  if (ids_.size() == capacity_) ids_.pop_front();
  ids_.push_back(id);
}

bool ExclusionWindow::contains(TaskId id) const {
  return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

std::uint32_t encode_difficulty(double difficulty) {
  return static_cast<std::uint32_t>(
      std::llround(std::clamp(difficulty, 0.0, 1.0) * 4294967295.0));
}

double decode_difficulty(std::uint32_t fixed) { return fixed / 4294967295.0; }

bool operator==(const DatabaseEntry& a, const DatabaseEntry& b) {
  return a.id == b.id && a.difficulty == b.difficulty;
}

bool operator==(const TaskDatabase& a, const TaskDatabase& b) {
  return a.fingerprint_ == b.fingerprint_ && a.seed_ == b.seed_ && a.strata_ == b.strata_;
}

namespace {

bool by_difficulty(const DatabaseEntry& a, const DatabaseEntry& b) {
  return a.difficulty != b.difficulty ? a.difficulty < b.difficulty : a.id < b.id;
}

CellMask sample_mask(Rng& rng, int cell_count, int size) {
  std::array<CellIndex, 64> cells{};
  std::iota(cells.begin(), cells.begin() + cell_count, 0);
  CellMask mask = 0;
  for (int i = 0; i < size; ++i) {
    const auto j = i + static_cast<int>(uniform_index(rng, cell_count - i));
    std::swap(cells[i], cells[j]);
    mask |= CellMask{1} << cells[i];
  }
  return mask;
}

// Greedy single-swap descent on |difficulty - target| from a random start.
CellMask search_toward(const DifficultyModel& model, Rng& rng, int size, double target) {
  constexpr int kMaxProposals = 96;
  constexpr double kCloseEnough = 5e-4;
  const int n = model.grid().cell_count();
  CellMask mask = sample_mask(rng, n, size);
  double gap = std::abs(model.difficulty(MemoryTask::from_mask(mask, n)) - target);
  for (int p = 0; p < kMaxProposals && gap > kCloseEnough; ++p) {
    // Drop a random target, add a random non-target.
    int drop_rank = static_cast<int>(uniform_index(rng, size));
    CellMask rest = mask;
    while (drop_rank-- > 0) rest &= rest - 1;
    const CellMask drop = rest & (~rest + 1);
    CellIndex add = static_cast<CellIndex>(uniform_index(rng, n));
    while ((mask >> add) & 1) add = static_cast<CellIndex>(uniform_index(rng, n));
    const CellMask candidate = (mask & ~drop) | (CellMask{1} << add);
    const double cand_gap =
        std::abs(model.difficulty(MemoryTask::from_mask(candidate, n)) - target);
    if (cand_gap < gap) {
      mask = candidate;
      gap = cand_gap;
    }
  }
  return mask;
}

constexpr char kMagic[8] = {'H', 'E', 'X', 'M', 'D', 'D', 'B', '\0'};

}  // namespace

TaskDatabase TaskDatabase::build(const DifficultyModel& model, const BuildOptions& options) {
  if (options.per_stratum < 1) throw DomainError("per_stratum must be at least 1");
  const int n = model.grid().cell_count();
  for (int size = MemoryTask::kMinTargets; size <= MemoryTask::kMaxTargets; ++size) {
    if (options.per_stratum > binomial(n, size)) {
      throw DomainError("per_stratum " + std::to_string(options.per_stratum) +
                        " exceeds the " + std::to_string(binomial(n, size)) +
                        " distinct tasks with " + std::to_string(size) + " targets");
    }
  }

  TaskDatabase db;
  db.fingerprint_ = model.fingerprint();
  db.seed_ = options.seed;
  const auto& cal = model.calibration();
  for (int size = MemoryTask::kMinTargets; size <= MemoryTask::kMaxTargets; ++size) {
    const int s = size - MemoryTask::kMinTargets;
    Rng rng = make_rng(options.seed, static_cast<std::uint64_t>(size));
    const std::uint64_t available = binomial(n, size);
    std::unordered_set<CellMask> chosen;
    chosen.reserve(options.per_stratum * 2);
    std::vector<CellMask> masks;
    masks.reserve(options.per_stratum);

    if (options.per_stratum * 2 > available) {
      // Dense request: enumerate the stratum and take a uniform subset.
      std::vector<CellMask> all;
      all.reserve(available);
      std::vector<CellIndex> idx(size);
      std::iota(idx.begin(), idx.end(), 0);
      while (true) {
        CellMask m = 0;
        for (CellIndex c : idx) m |= CellMask{1} << c;
        all.push_back(m);
        int k = size - 1;
        while (k >= 0 && idx[k] == n - size + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
      }
      shuffle(all.begin(), all.end(), rng);
      masks.assign(all.begin(), all.begin() + static_cast<long>(options.per_stratum));
    } else {
      const auto targeted = static_cast<std::size_t>(
          std::floor(options.per_stratum * std::clamp(options.targeted_fraction, 0.0, 1.0)));
      const std::size_t uniform = options.per_stratum - targeted;
      while (masks.size() < uniform) {
        const CellMask m = sample_mask(rng, n, size);
        if (chosen.insert(m).second) masks.push_back(m);
      }
      const double lo = model.normalize(cal.stratum_low[s]);
      const double hi = model.normalize(cal.stratum_high[s]);
      while (masks.size() < options.per_stratum) {
        const double target = lo + (hi - lo) * uniform01(rng);
        CellMask m = search_toward(model, rng, size, target);
        for (int attempt = 0; attempt < 8 && chosen.count(m); ++attempt) {
          m = search_toward(model, rng, size, target);
        }
        while (chosen.count(m)) m = sample_mask(rng, n, size);
        chosen.insert(m);
        masks.push_back(m);
      }
    }

    auto& stratum = db.strata_[s];
    stratum.reserve(masks.size());
    for (CellMask m : masks) {
      const double d = model.difficulty(MemoryTask::from_mask(m, n));
      stratum.push_back({m, decode_difficulty(encode_difficulty(d))});
    }
    std::sort(stratum.begin(), stratum.end(), by_difficulty);
  }
  db.index();
  return db;
}

TaskDatabase TaskDatabase::from_entries(std::vector<DatabaseEntry> entries,
                                        std::uint64_t fingerprint, std::uint64_t seed) {
  TaskDatabase db;
  db.fingerprint_ = fingerprint;
  db.seed_ = seed;
  for (auto& e : entries) {
    const int size = std::popcount(e.id);
    if (size < MemoryTask::kMinTargets || size > MemoryTask::kMaxTargets) {
      throw DomainError("database entry has an invalid target count");
    }
    e.difficulty = decode_difficulty(encode_difficulty(e.difficulty));
    db.strata_[size - MemoryTask::kMinTargets].push_back(e);
  }
  for (auto& s : db.strata_) std::sort(s.begin(), s.end(), by_difficulty);
  db.index();
  return db;
}

void TaskDatabase::index() {
  sorted_.clear();
  for (const auto& s : strata_) sorted_.insert(sorted_.end(), s.begin(), s.end());
  std::sort(sorted_.begin(), sorted_.end(), by_difficulty);
}

const std::vector<DatabaseEntry>& TaskDatabase::stratum(int target_count) const {
  if (target_count < MemoryTask::kMinTargets || target_count > MemoryTask::kMaxTargets) {
    throw DomainError("no stratum for " + std::to_string(target_count) + " targets");
  }
  return strata_[target_count - MemoryTask::kMinTargets];
}

DatabaseEntry TaskDatabase::lookup(double target, const ExclusionWindow& exclusions,
                                   Rng& rng, const LookupOptions& options) const {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw DomainError("target difficulty must lie in [0, 1]");
  }
  if (sorted_.empty()) throw StateError("lookup on an empty task database");

  auto key = [](const DatabaseEntry& e, double v) { return e.difficulty < v; };
  const auto band_begin =
      std::lower_bound(sorted_.begin(), sorted_.end(), target - options.tolerance, key);
  std::size_t in_band = 0;
  auto band_end = band_begin;
  for (; band_end != sorted_.end() && band_end->difficulty <= target + options.tolerance;
       ++band_end) {
    if (!exclusions.contains(band_end->id)) ++in_band;
  }
  if (in_band > 0) {
    auto pick = uniform_index(rng, in_band);
    for (auto it = band_begin; it != band_end; ++it) {
      if (exclusions.contains(it->id)) continue;
      if (pick-- == 0) return *it;
    }
  }

  // Nothing inside the band: walk outward to the nearest available entry.
  const auto pivot = std::lower_bound(sorted_.begin(), sorted_.end(), target, key);
  auto right = pivot;
  while (right != sorted_.end() && exclusions.contains(right->id)) ++right;
  auto left = pivot;
  bool have_left = false;
  while (left != sorted_.begin()) {
    --left;
    if (!exclusions.contains(left->id)) {
      have_left = true;
      break;
    }
  }
  if (right == sorted_.end() && !have_left) {
    throw StateError("every database entry is excluded");
  }
  if (right == sorted_.end()) return *left;
  if (!have_left) return *right;
  return (target - left->difficulty) <= (right->difficulty - target) ? *left : *right;
}

void TaskDatabase::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  detail::put_u32(out, kFormatVersion);
  detail::put_u64(out, fingerprint_);
  detail::put_u64(out, seed_);
  for (const auto& stratum : strata_) {
    detail::put_u32(out, static_cast<std::uint32_t>(stratum.size()));
    for (const auto& e : stratum) {
      detail::put_uint(out, e.id, 5);  // 36-bit mask packed in 5 bytes
      detail::put_u32(out, encode_difficulty(e.difficulty));
    }
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

TaskDatabase TaskDatabase::load(const std::filesystem::path& path,
                                std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw FormatError(path.string() + " is not a task database");
  }
  const auto version = detail::get_u32(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported ddb format version " + std::to_string(version));
  }
  TaskDatabase db;
  db.fingerprint_ = detail::get_u64(in);
  if (db.fingerprint_ != expected_fingerprint) {
    throw ConfigError("task database was built with different difficulty weights");
  }
  db.seed_ = detail::get_u64(in);
  for (int s = 0; s < MemoryTask::kStrataCount; ++s) {
    const auto count = detail::get_u32(in);
    auto& stratum = db.strata_[s];
    stratum.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      DatabaseEntry e;
      e.id = detail::get_uint(in, 5);
      e.difficulty = decode_difficulty(detail::get_u32(in));
      if (std::popcount(e.id) != s + MemoryTask::kMinTargets) {
        throw FormatError("ddb record in the wrong stratum");
      }
      stratum.push_back(e);
    }
  }
  db.index();
  return db;
}

}  // namespace hexmem

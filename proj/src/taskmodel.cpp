#include "hexmem/taskmodel.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <tuple>

#include "hexmem/errors.hpp"
#include "hexmem/random.hpp"

namespace hexmem {

MemoryTask::MemoryTask(std::vector<CellIndex> targets, int cell_count)
    : targets_(std::move(targets)) {
  std::sort(targets_.begin(), targets_.end());
  if (size() < kMinTargets || size() > kMaxTargets) {
    throw DomainError("memory task needs between 4 and 14 targets, got " +
                      std::to_string(size()));
  }
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    const CellIndex cell = targets_[i];
    if (cell < 0 || cell >= cell_count) {
      throw DomainError("target cell " + std::to_string(cell) +
                        " outside the grid");
    }
    if (i > 0 && targets_[i - 1] == cell) {
      throw DomainError("duplicate target cell " + std::to_string(cell));
    }
    mask_ |= CellMask{1} << cell;
  }
}

MemoryTask MemoryTask::from_mask(CellMask mask, int cell_count) {
  std::vector<CellIndex> cells;
  while (mask != 0) {
    const int bit = std::countr_zero(mask);
    cells.push_back(bit);
    mask &= mask - 1;
  }
  return MemoryTask(std::move(cells), cell_count);
}

MemoryTask MemoryTask::parse(std::string_view text, int cell_count) {
  std::vector<CellIndex> cells;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
      token.remove_prefix(1);
    }
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) {
      token.remove_suffix(1);
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw DomainError("cannot parse cell list: \"" + std::string(text) + "\"");
    }
    cells.push_back(value);
    pos = end + 1;
  }
  return MemoryTask(std::move(cells), cell_count);
}

std::string MemoryTask::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(targets_[i]);
  }
  return out;
}

void DifficultyWeights::validate() const {
  if (targets < 0.0 || components < 0.0 || distribution < 0.0) {
    throw ConfigError("difficulty weights must be nonnegative");
  }
  if (std::abs(targets + components + distribution - 1.0) > 1e-9) {
    throw ConfigError("difficulty weights must sum to 1");
  }
}

namespace {

// Union-find over the target cells.
int find_root(std::array<int, 64>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

int count_components(const HexGrid& grid, CellMask mask) {
  std::array<int, 64> parent{};
  std::iota(parent.begin(), parent.end(), 0);
  int components = std::popcount(mask);
  for (CellMask rest = mask; rest != 0; rest &= rest - 1) {
    const int cell = std::countr_zero(rest);
    // Only look at higher-numbered neighbours so each edge is merged once.
    CellMask linked = grid.neighbor_mask(cell) & mask & ~((CellMask{2} << cell) - 1);
    for (; linked != 0; linked &= linked - 1) {
      const int a = find_root(parent, cell);
      const int b = find_root(parent, std::countr_zero(linked));
      if (a != b) {
        parent[b] = a;
        --components;
      }
    }
  }
  return components;
}

TaskFeatures extract_features(const HexGrid& grid, const DistanceTable& table,
                              const MemoryTask& task) {
  if (task.size() < MemoryTask::kMinTargets ||
      task.size() > MemoryTask::kMaxTargets) {
    throw DomainError("task violates target-count bounds");
  }
  const auto& cells = task.targets();
  for (CellIndex c : cells) grid.check_cell(c);

  TaskFeatures f;
  f.target_count = task.size();
  f.component_count = count_components(grid, task.mask());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      f.distribution_raw += table.at(cells[i], cells[j]);
    }
  }
  const int pairs = f.target_count * (f.target_count - 1) / 2;
  constexpr double kTargetSpan = MemoryTask::kMaxTargets - MemoryTask::kMinTargets;
  constexpr double kComponentSpan = MemoryTask::kMaxTargets - 1;
  f.targets = (f.target_count - MemoryTask::kMinTargets) / kTargetSpan;
  f.components = (f.component_count - 1) / kComponentSpan;
  f.distribution = table.max_entry() > 0
                       ? static_cast<double>(f.distribution_raw) /
                             (static_cast<double>(pairs) * table.max_entry())
                       : 0.0;
  return f;
}

double linear_difficulty(const TaskFeatures& features,
                         const DifficultyWeights& weights) {
  weights.validate();
  return weights.targets * features.targets +
         weights.components * features.components +
         weights.distribution * features.distribution;
}

namespace {

// Simulated annealing over fixed-size target sets using single-cell swaps.
// `sign` = +1 searches for the maximum, -1 for the minimum.
double anneal_extreme(const HexGrid& grid, const DistanceTable& table,
                      const DifficultyWeights& weights, int size, double sign,
                      std::uint64_t seed) {
  constexpr int kIterations = 4000;
  constexpr double kStartTemperature = 0.05;
  constexpr double kEndTemperature = 1e-4;
  const int n_cells = grid.cell_count();
  Rng rng = make_rng(seed);

  std::vector<CellIndex> all(n_cells);
  std::iota(all.begin(), all.end(), 0);
  shuffle(all.begin(), all.end(), rng);
  std::vector<CellIndex> cells(all.begin(), all.begin() + size);
  CellMask mask = 0;
  for (CellIndex c : cells) mask |= CellMask{1} << c;

  auto objective = [&](const std::vector<CellIndex>& cs) {
    return sign * linear_difficulty(extract_features(grid, table, MemoryTask(cs, n_cells)),
                                    weights);
  };
  double current = objective(cells);
  double best = current;
  for (int it = 0; it < kIterations; ++it) {
    const double t = static_cast<double>(it) / kIterations;
    const double temperature = kStartTemperature * (1.0 - t) + kEndTemperature * t;
    const auto slot = uniform_index(rng, cells.size());
    CellIndex replacement = static_cast<CellIndex>(uniform_index(rng, n_cells));
    while ((mask >> replacement) & 1) {
      replacement = static_cast<CellIndex>(uniform_index(rng, n_cells));
    }
    const CellIndex old = cells[slot];
    cells[slot] = replacement;
    const double candidate = objective(cells);
    if (candidate >= current ||
        uniform01(rng) < std::exp((candidate - current) / temperature)) {
      current = candidate;
      mask = (mask & ~(CellMask{1} << old)) | (CellMask{1} << replacement);
      best = std::max(best, current);
    } else {
      cells[slot] = old;
    }
  }
  return sign * best;
}

// Exhaustive bounds over all tasks of one size.
std::pair<double, double> enumerate_bounds(const HexGrid& grid,
                                           const DistanceTable& table,
                                           const DifficultyWeights& weights,
                                           int size) {
  const int n = grid.cell_count();
  std::vector<CellIndex> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  double lo = 1e300;
  double hi = -1e300;
  while (true) {
    const double v =
        linear_difficulty(extract_features(grid, table, MemoryTask(idx, n)), weights);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    int k = size - 1;
    while (k >= 0 && idx[k] == n - size + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
  return {lo, hi};
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

DifficultyCalibration calibrate(const HexGrid& grid, const DistanceTable& table,
                                const DifficultyWeights& weights) {
  weights.validate();
  using Key = std::tuple<int, int, double, double, double>;
  static std::mutex cache_mutex;
  static std::map<Key, DifficultyCalibration> cache;
  const Key key{grid.rows(), grid.cols(), weights.targets, weights.components,
                weights.distribution};
  {
    std::lock_guard lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  constexpr int kRestarts = 3;
  constexpr std::uint64_t kEnumerationLimit = 100000;
  DifficultyCalibration cal;
  cal.low = 1e300;
  cal.high = -1e300;
  for (int size = MemoryTask::kMinTargets; size <= MemoryTask::kMaxTargets; ++size) {
    const int s = size - MemoryTask::kMinTargets;
    // C(n, size) small enough to enumerate (only n_t = 4 on the 6x6 grid).
    double combos = 1.0;
    for (int i = 0; i < size; ++i) combos = combos * (grid.cell_count() - i) / (i + 1);
    double lo = 1e300;
    double hi = -1e300;
    if (combos <= kEnumerationLimit) {
      std::tie(lo, hi) = enumerate_bounds(grid, table, weights, size);
    } else {
      for (int r = 0; r < kRestarts; ++r) {
        const std::uint64_t seed = derive_seed(static_cast<std::uint64_t>(size), r);
        lo = std::min(lo, anneal_extreme(grid, table, weights, size, -1.0, seed));
        hi = std::max(hi, anneal_extreme(grid, table, weights, size, +1.0, seed ^ 1));
      }
    }
    cal.stratum_low[s] = lo;
    cal.stratum_high[s] = hi;
    cal.low = std::min(cal.low, lo);
    cal.high = std::max(cal.high, hi);
  }

  std::lock_guard lock(cache_mutex);
  cache.emplace(key, cal);
  return cal;
}

DifficultyModel::DifficultyModel(HexGrid grid, DifficultyWeights weights)
    : grid_(std::move(grid)), table_(grid_), weights_(weights) {
  weights_.validate();
  calibration_ = calibrate(grid_, table_, weights_);
}

double DifficultyModel::normalize(double linear) const {
  const double span = calibration_.high - calibration_.low;
  if (span <= 1e-12) return 0.0;
  return std::clamp((linear - calibration_.low) / span, 0.0, 1.0);
}

std::uint64_t DifficultyModel::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, static_cast<std::uint64_t>(grid_.rows()));
  h = fnv1a(h, static_cast<std::uint64_t>(grid_.cols()));
  for (double v : {weights_.targets, weights_.components, weights_.distribution,
                   calibration_.low, calibration_.high}) {
    h = fnv1a(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

TrialOutcome score_trial(const MemoryTask& task, std::span<const CellIndex> clicks,
                         int cell_count) {
  if (static_cast<int>(clicks.size()) != task.size()) {
    throw ProtocolError("expected " + std::to_string(task.size()) +
                        " clicks, got " + std::to_string(clicks.size()));
  }
  TrialOutcome out;
  out.clicks.assign(clicks.begin(), clicks.end());
  out.hits.reserve(clicks.size());
  CellMask seen = 0;
  for (CellIndex c : clicks) {
    if (c < 0 || c >= cell_count) {
      throw ProtocolError("click on cell " + std::to_string(c) + " outside the grid");
    }
    if ((seen >> c) & 1) {
      throw ProtocolError("duplicate click on cell " + std::to_string(c));
    }
    seen |= CellMask{1} << c;
    const bool hit = task.contains(c);
    out.hits.push_back(hit);
    out.correct += hit ? 1 : 0;
  }
  out.score = static_cast<double>(out.correct) / task.size();
  out.win = out.correct == task.size();
  return out;
}

std::vector<MemoryTask> read_task_fixture(std::istream& in, int cell_count) {
  std::vector<MemoryTask> tasks;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    tasks.push_back(MemoryTask::parse(
        std::string_view(line).substr(first, last - first + 1), cell_count));
  }
  return tasks;
}

void write_task_fixture(std::ostream& out, std::span<const MemoryTask> tasks) {
  for (const auto& task : tasks) out << task.to_string() << '\n';
}

}  // namespace hexmem

#include "hexmem/hexgrid.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "hexmem/errors.hpp"

namespace hexmem {

HexGrid::HexGrid(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1 || rows * cols > 64) {
    throw DomainError("hex grid must have between 1 and 64 cells");
  }
  const int n = cell_count();
  adjacency_.resize(n);
  neighbor_masks_.assign(n, 0);
  for (CellIndex cell = 0; cell < n; ++cell) {
    const int r = row_of(cell);
    const int c = col_of(cell);
    // Odd rows sit half a cell to the right, so their diagonal neighbours are
    // at columns c and c+1; even rows reach back to c-1 and c.
    const int lo = (r % 2 == 0) ? c - 1 : c;
    const std::array<std::pair<int, int>, 6> candidates = {{
        {r, c - 1}, {r, c + 1},
        {r - 1, lo}, {r - 1, lo + 1},
        {r + 1, lo}, {r + 1, lo + 1},
    }};
    for (auto [nr, nc] : candidates) {
      if (nr < 0 || nr >= rows_ || nc < 0 || nc >= cols_) continue;
      const CellIndex other = index(nr, nc);
      adjacency_[cell].push_back(other);
      neighbor_masks_[cell] |= CellMask{1} << other;
    }
    std::sort(adjacency_[cell].begin(), adjacency_[cell].end());
  }

  hops_.assign(static_cast<std::size_t>(n) * n, -1);
  for (CellIndex src = 0; src < n; ++src) {
    int* dist = &hops_[static_cast<std::size_t>(src) * n];
    std::queue<CellIndex> frontier;
    dist[src] = 0;
    frontier.push(src);
    while (!frontier.empty()) {
      const CellIndex cur = frontier.front();
      frontier.pop();
      for (CellIndex next : adjacency_[cur]) {
        if (dist[next] < 0) {
          dist[next] = dist[cur] + 1;
          frontier.push(next);
        }
      }
    }
  }
}

void HexGrid::check_cell(CellIndex cell) const {
  if (cell < 0 || cell >= cell_count()) {
    throw DomainError("cell index " + std::to_string(cell) + " outside [0, " +
                      std::to_string(cell_count()) + ")");
  }
}

std::span<const CellIndex> HexGrid::neighbors(CellIndex cell) const {
  check_cell(cell);
  return adjacency_[cell];
}

bool HexGrid::adjacent(CellIndex a, CellIndex b) const {
  check_cell(a);
  check_cell(b);
  return (neighbor_masks_[a] >> b) & 1;
}

CellMask HexGrid::neighbor_mask(CellIndex cell) const {
  check_cell(cell);
  return neighbor_masks_[cell];
}

int HexGrid::hop_distance(CellIndex a, CellIndex b) const {
  check_cell(a);
  check_cell(b);
  return hops_[static_cast<std::size_t>(a) * cell_count() + b];
}

int HexGrid::intermediate_count(CellIndex a, CellIndex b) const {
  const int hops = hop_distance(a, b);
  return hops > 0 ? hops - 1 : 0;
}

CellIndex HexGrid::rotate_half_turn(CellIndex cell) const {
  check_cell(cell);
  return index(rows_ - 1 - row_of(cell), cols_ - 1 - col_of(cell));
}

DistanceTable::DistanceTable(const HexGrid& grid)
    : size_(grid.cell_count()),
      entries_(static_cast<std::size_t>(size_) * size_, 0) {
  for (CellIndex a = 0; a < size_; ++a) {
    for (CellIndex b = 0; b < size_; ++b) {
      const int d = grid.intermediate_count(a, b);
      entries_[a * size_ + b] = d;
      max_entry_ = std::max(max_entry_, d);
    }
  }
}

}  // namespace hexmem

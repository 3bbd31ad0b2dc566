#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hexmem {

using CellIndex = int;

// Bitmask over grid cells; bit i set means cell i is selected. 64 bits cover
// every grid this library is used with (6x6 = 36 cells).
using CellMask = std::uint64_t;

// Pointy-top hexagons, odd rows shifted right by half a cell ("odd-r" offset
// layout). Cells are numbered row-major starting at 0.
class HexGrid {
 public:
  static constexpr int kDefaultRows = 6;
  static constexpr int kDefaultCols = 6;

  HexGrid(int rows = kDefaultRows, int cols = kDefaultCols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int cell_count() const { return rows_ * cols_; }

  std::span<const CellIndex> neighbors(CellIndex cell) const;
  bool adjacent(CellIndex a, CellIndex b) const;
  CellMask neighbor_mask(CellIndex cell) const;

  // Shortest-path edge count between two cells.
  int hop_distance(CellIndex a, CellIndex b) const;

  // Number of hexagons strictly between a and b on a shortest path:
  // 0 for a == b and for neighbours, hop_distance - 1 otherwise.
  int intermediate_count(CellIndex a, CellIndex b) const;

  CellIndex index(int row, int col) const { return row * cols_ + col; }
  int row_of(CellIndex cell) const { return cell / cols_; }
  int col_of(CellIndex cell) const { return cell % cols_; }

  // 180-degree rotation (r, c) -> (rows-1-r, cols-1-c). With an even row
  // count this preserves adjacency under the odd-r layout.
  CellIndex rotate_half_turn(CellIndex cell) const;

  void check_cell(CellIndex cell) const;

  static constexpr const char* kOrientation = "pointy-top";
  static constexpr const char* kOffset = "odd-r";

 private:
  int rows_;
  int cols_;
  std::vector<std::vector<CellIndex>> adjacency_;
  std::vector<CellMask> neighbor_masks_;
  std::vector<int> hops_;  // row-major cell_count x cell_count
};

// All-pairs intermediate-hex counts over a grid, with its maximum entry.
class DistanceTable {
 public:
  explicit DistanceTable(const HexGrid& grid);

  int at(CellIndex a, CellIndex b) const { return entries_[a * size_ + b]; }
  int size() const { return size_; }
  int max_entry() const { return max_entry_; }

 private:
  int size_;
  int max_entry_ = 0;
  std::vector<int> entries_;
};

inline DistanceTable build_distance_table(const HexGrid& grid) {
  return DistanceTable(grid);
}

}  // namespace hexmem

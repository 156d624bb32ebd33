#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wlf/frame.hpp"

namespace wlf {

struct CellIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// M x N depth matrix rebuilt from a sweep. Each cell keeps the nearest point
// that fell into it; every point (kept or evicted) remembers its cell, so
// evicted returns inherit the segment of the point that won the cell.
struct RangeImage {
  static constexpr std::int64_t kNoPoint = -1;

  int rows = 0;
  int cols = 0;
  std::vector<double> depth;              // row-major, NaN = no return
  std::vector<std::int64_t> cell_point;   // row-major, kNoPoint when empty
  std::vector<CellIndex> point_cell;      // one entry per frame point

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(col);
  }
  double at(int row, int col) const { return depth[index(row, col)]; }
  bool empty_cell(int row, int col) const { return cell_point[index(row, col)] == kNoPoint; }
};

// Column of a return at (x, y): floor((atan2(y, x) + pi) / 2pi * columns),
// clamped to columns - 1 at azimuth +pi.
int azimuth_column(double x, double y, int columns);

RangeImage build_range_image(const Frame& frame, int beams, int columns);

// Debug dump: range.f32 (M x N row-major float32, NaN for empty cells).
void write_range_dump(const std::filesystem::path& dir, const RangeImage& image);

}  // namespace wlf

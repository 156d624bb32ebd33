#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wlf/range_image.hpp"

namespace wlf {

struct RingSegments {
  std::vector<std::int32_t> segment_id;    // per point, dense in [0, num_segments)
  std::vector<std::int32_t> cell_segment;  // per cell, -1 for empty cells
  std::int32_t num_segments = 0;
};

struct DcsConfig {
  double window_base = 10.0;       // columns at the reference range
  double depth_base = 0.24;        // metres at the reference range
  double reference_range = 50.0;   // metres

  void validate() const;
};

// Per-row scan parameters. A cell may link to a prior non-empty cell at most
// `half_window` columns back whose depth differs by < `depth_threshold`.
struct RowThresholds {
  int half_window = 1;
  double depth_threshold = 0.0;
};

inline constexpr double kMinRowDepthThreshold = 0.05;

// W_r = (ref / M_r) * W clamped to [2, columns]; T_r = (M_r / ref) * T_base
// clamped to >= 0.05 m. half_window = floor(W_r / 2).
RowThresholds row_thresholds(double row_max_depth, int columns, const DcsConfig& cfg);

// Simplified DCS: each cell joins the immediately preceding cell's segment
// when both hold returns and their depths differ by < threshold.
RingSegments dcs_simplified(const RangeImage& image, double threshold);

// Windowed DCS with per-row thresholds supplied by the caller.
RingSegments dcs_with_thresholds(const RangeImage& image, std::span<const RowThresholds> rows);

// Windowed DCS with distance-adaptive thresholds from `cfg`.
RingSegments dcs_dynamic(const RangeImage& image, const DcsConfig& cfg);

// Per-row parameters dcs_dynamic would use for `image`.
std::vector<RowThresholds> dynamic_row_thresholds(const RangeImage& image, const DcsConfig& cfg);

// Points every entry of an equal table at its root. Entries equal to their
// own index are roots; negative entries are skipped.
void resolve_equal_table(std::span<std::int32_t> table);

// Debug dump: segments.u32 (M x N row-major, 0xFFFFFFFF for empty cells).
void write_segment_dump(const std::filesystem::path& dir, const RangeImage& image,
                        const RingSegments& segments);

}  // namespace wlf

#include "wlf/dcs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"

namespace wlf {
namespace {

RingSegments finish(const RangeImage& image, std::vector<std::int32_t> cell_segment,
                    std::int32_t num_segments) {
  RingSegments out;
  out.num_segments = num_segments;
  out.segment_id.resize(image.point_cell.size());
  for (std::size_t i = 0; i < image.point_cell.size(); ++i) {
    const auto& c = image.point_cell[i];
    out.segment_id[i] = cell_segment[image.index(c.row, c.col)];
  }
  out.cell_segment = std::move(cell_segment);
  return out;
}

}  // namespace

void DcsConfig::validate() const {
  if (!(window_base >= 1.0)) {
    throw ConfigError("DCS window_base must be >= 1");
  }
  if (!(depth_base > 0.0)) {
    throw ConfigError("DCS depth_base must be > 0");
  }
  if (!(reference_range > 0.0)) {
    throw ConfigError("DCS reference_range must be > 0");
  }
}

RowThresholds row_thresholds(double row_max_depth, int columns, const DcsConfig& cfg) {
  const double max_window = std::max(2.0, static_cast<double>(columns));
  const double window =
      std::clamp(cfg.reference_range / row_max_depth * cfg.window_base, 2.0, max_window);
  RowThresholds t;
  t.half_window = std::max(1, static_cast<int>(std::floor(window / 2.0)));
  t.depth_threshold =
      std::max(row_max_depth / cfg.reference_range * cfg.depth_base, kMinRowDepthThreshold);
  return t;
}

std::vector<RowThresholds> dynamic_row_thresholds(const RangeImage& image, const DcsConfig& cfg) {
  cfg.validate();
  std::vector<RowThresholds> rows(static_cast<std::size_t>(image.rows));
  for (int r = 0; r < image.rows; ++r) {
    double row_max = -1.0;
    for (int c = 0; c < image.cols; ++c) {
      const double d = image.at(r, c);
      if (!std::isnan(d)) {
        row_max = std::max(row_max, d);
      }
    }
    if (row_max > 0.0) {
      rows[r] = row_thresholds(row_max, image.cols, cfg);
    } else {
      rows[r] = {1, kMinRowDepthThreshold};
    }
  }
  return rows;
}

RingSegments dcs_simplified(const RangeImage& image, double threshold) {
  if (!(threshold > 0.0)) {
    throw ArgumentError("DCS threshold must be > 0");
  }
  std::vector<std::int32_t> ids(image.depth.size(), -1);
  std::int32_t next = 0;
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      const double d = image.at(r, c);
      if (std::isnan(d)) {
        continue;
      }
      const std::size_t idx = image.index(r, c);
      if (c >= 1 && !std::isnan(image.at(r, c - 1)) &&
          std::abs(d - image.at(r, c - 1)) < threshold) {
        ids[idx] = ids[idx - 1];
      } else {
        ids[idx] = next++;
      }
    }
  }
  return finish(image, std::move(ids), next);
}

void resolve_equal_table(std::span<std::int32_t> table) {
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i] < 0) {
      continue;
    }
    auto root = static_cast<std::size_t>(table[i]);
    while (static_cast<std::size_t>(table[root]) != root) {
      root = static_cast<std::size_t>(table[root]);
    }
    // Path compression.
    auto cur = i;
    while (static_cast<std::size_t>(table[cur]) != root) {
      const auto next = static_cast<std::size_t>(table[cur]);
      table[cur] = static_cast<std::int32_t>(root);
      cur = next;
    }
  }
}

RingSegments dcs_with_thresholds(const RangeImage& image, std::span<const RowThresholds> rows) {
  if (rows.size() != static_cast<std::size_t>(image.rows)) {
    throw ArgumentError("one RowThresholds entry per range image row is required");
  }
  std::vector<std::int32_t> ids(image.depth.size(), -1);
  std::vector<std::int32_t> equal(static_cast<std::size_t>(image.cols));
  std::int32_t next = 0;

  for (int r = 0; r < image.rows; ++r) {
    const auto [half_window, threshold] = rows[r];
    // Build the equal table: each return points at the nearest earlier return
    // inside the window whose depth is close enough.
    for (int c = 0; c < image.cols; ++c) {
      const double d = image.at(r, c);
      if (std::isnan(d)) {
        equal[c] = -1;
        continue;
      }
      equal[c] = c;
      for (int j = 1; j <= half_window && c - j >= 0; ++j) {
        const double prev = image.at(r, c - j);
        if (!std::isnan(prev) && std::abs(prev - d) < threshold) {
          equal[c] = equal[c - j];
          break;
        }
      }
    }
    resolve_equal_table(equal);

    const std::size_t row_base = image.index(r, 0);
    for (int c = 0; c < image.cols; ++c) {
      if (equal[c] == c) {
        ids[row_base + c] = next++;
      }
    }
    for (int c = 0; c < image.cols; ++c) {
      if (equal[c] >= 0) {
        ids[row_base + c] = ids[row_base + equal[c]];
      }
    }
  }
  return finish(image, std::move(ids), next);
}

RingSegments dcs_dynamic(const RangeImage& image, const DcsConfig& cfg) {
  const auto rows = dynamic_row_thresholds(image, cfg);
  return dcs_with_thresholds(image, rows);
}

void write_segment_dump(const std::filesystem::path& dir, const RangeImage& image,
                        const RingSegments& segments) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint32_t> values(image.depth.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (segments.cell_segment[i] >= 0) {
      values[i] = static_cast<std::uint32_t>(segments.cell_segment[i]);
    }
  }
  io::write_array<std::uint32_t>(dir / "segments.u32", values);
}

}  // namespace wlf

#include "wlf/range_image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"

namespace wlf {

int azimuth_column(double x, double y, int columns) {
  const double azimuth = std::atan2(y, x);
  const double t = (azimuth + std::numbers::pi) / (2.0 * std::numbers::pi);
  const int col = static_cast<int>(std::floor(t * columns));
  return std::clamp(col, 0, columns - 1);
}

RangeImage build_range_image(const Frame& frame, int beams, int columns) {
  if (beams <= 0 || columns <= 0) {
    throw ArgumentError("range image needs positive dimensions");
  }
  RangeImage image;
  image.rows = beams;
  image.cols = columns;
  const std::size_t cells = static_cast<std::size_t>(beams) * static_cast<std::size_t>(columns);
  image.depth.assign(cells, std::numeric_limits<double>::quiet_NaN());
  image.cell_point.assign(cells, RangeImage::kNoPoint);
  image.point_cell.resize(frame.size());

  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto& p = frame.points[i];
    const int row = frame.beam_row[i];
    if (row >= beams) {
      throw InvalidFrameError("frame " + frame.frame_id + ": beam row " + std::to_string(row) +
                              " outside a " + std::to_string(beams) + "-row range image");
    }
    const int col = azimuth_column(p.x, p.y, columns);
    image.point_cell[i] = {row, col};
    const std::size_t idx = image.index(row, col);
    // Zero-range returns still need a positive stored depth.
    const double range = std::max(p.range(), 1e-9);
    if (image.cell_point[idx] == RangeImage::kNoPoint || range < image.depth[idx]) {
      image.depth[idx] = range;
      image.cell_point[idx] = static_cast<std::int64_t>(i);
    }
  }
  return image;
}

void write_range_dump(const std::filesystem::path& dir, const RangeImage& image) {
  std::filesystem::create_directories(dir);
  std::vector<float> values(image.depth.begin(), image.depth.end());
  io::write_array<float>(dir / "range.f32", values);
}

}  // namespace wlf

#pragma once

#include <cstdint>
#include <span>

#include "wlf/ccl.hpp"
#include "wlf/dcs.hpp"
#include "wlf/frame.hpp"
#include "wlf/labels.hpp"

namespace wlf {

// Out-of-box proportion thresholds of the segment vote. Both comparisons are
// strict, so a proportion exactly on a threshold is ignored.
inline constexpr double kSegmentBackgroundProportion = 0.5;
inline constexpr double kSegmentForegroundProportion = 0.1;

// 0 if prop > 0.5, 1 if prop < 0.1, -1 otherwise.
std::int8_t classify_proportion(double prop);

// Votes every ring segment by the share of its points that fall outside all
// boxes; the verdict is written to the segment's in-box points. Points
// outside every box are background.
TrinaryLabels refine_by_segments(std::span<const std::int32_t> box_assign,
                                 const RingSegments& segments);

// All in-box points foreground, everything else background. Feeding this to
// generate_labels gives the CCL-only baseline.
TrinaryLabels frustum_trinary(std::span<const std::int32_t> box_assign);

// Raw frustum crop: every in-box point takes the class and id of its box.
PseudoLabels frustum_labels(std::span<const std::int32_t> box_assign, std::span<const Box2D> boxes);

// Per box: cluster the box's foreground points at the class radius and keep
// the largest component as the instance. Other foreground clusters of the box
// become ignore; background and ignore codes carry through.
PseudoLabels generate_labels(const Frame& frame, const TrinaryLabels& trinary,
                             std::span<const std::int32_t> box_assign,
                             std::span<const Box2D> boxes, const ClassRadii& radii);

}  // namespace wlf

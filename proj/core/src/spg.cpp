#include "wlf/spg.hpp"

#include <map>
#include <string>

#include "wlf/error.hpp"

namespace wlf {

std::int8_t classify_proportion(double prop) {
  if (prop > kSegmentBackgroundProportion) {
    return kTrinaryBackground;
  }
  if (prop < kSegmentForegroundProportion) {
    return kTrinaryForeground;
  }
  return kTrinaryIgnore;
}

TrinaryLabels refine_by_segments(std::span<const std::int32_t> box_assign,
                                 const RingSegments& segments) {
  const std::size_t n = box_assign.size();
  if (segments.segment_id.size() != n) {
    throw ArgumentError("box assignment and ring segments differ in length");
  }
  const auto num_segments = static_cast<std::size_t>(segments.num_segments);
  std::vector<std::size_t> inside(num_segments, 0);
  std::vector<std::size_t> outside(num_segments, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto seg = static_cast<std::size_t>(segments.segment_id[i]);
    if (box_assign[i] > 0) {
      ++inside[seg];
    } else {
      ++outside[seg];
    }
  }

  std::vector<std::int8_t> verdict(num_segments, kTrinaryBackground);
  for (std::size_t s = 0; s < num_segments; ++s) {
    const std::size_t total = inside[s] + outside[s];
    if (inside[s] > 0) {
      verdict[s] = classify_proportion(static_cast<double>(outside[s]) / static_cast<double>(total));
    }
  }

  TrinaryLabels out(n, kTrinaryBackground);
  for (std::size_t i = 0; i < n; ++i) {
    if (box_assign[i] > 0) {
      out[i] = verdict[static_cast<std::size_t>(segments.segment_id[i])];
    }
  }
  return out;
}

TrinaryLabels frustum_trinary(std::span<const std::int32_t> box_assign) {
  TrinaryLabels out(box_assign.size(), kTrinaryBackground);
  for (std::size_t i = 0; i < box_assign.size(); ++i) {
    if (box_assign[i] > 0) {
      out[i] = kTrinaryForeground;
    }
  }
  return out;
}

PseudoLabels frustum_labels(std::span<const std::int32_t> box_assign, std::span<const Box2D> boxes) {
  PseudoLabels out(box_assign.size());
  for (std::size_t i = 0; i < box_assign.size(); ++i) {
    if (box_assign[i] == 0) {
      continue;
    }
    const Box2D* box = find_box(boxes, box_assign[i]);
    if (box == nullptr) {
      throw ArgumentError("point assigned to unknown box " + std::to_string(box_assign[i]));
    }
    out.semantic[i] = box->class_id;
    out.instance[i] = box->box_id;
  }
  return out;
}

PseudoLabels generate_labels(const Frame& frame, const TrinaryLabels& trinary,
                             std::span<const std::int32_t> box_assign,
                             std::span<const Box2D> boxes, const ClassRadii& radii) {
  const std::size_t n = frame.size();
  if (trinary.size() != n || box_assign.size() != n) {
    throw ArgumentError("trinary labels, box assignment and frame differ in length");
  }

  PseudoLabels out(n);
  std::map<std::int32_t, std::vector<std::size_t>> foreground_by_box;
  for (std::size_t i = 0; i < n; ++i) {
    switch (trinary[i]) {
      case kTrinaryIgnore:
        out.semantic[i] = kIgnoreLabel;
        break;
      case kTrinaryForeground:
        if (box_assign[i] > 0) {
          foreground_by_box[box_assign[i]].push_back(i);
        }
        break;
      default:
        break;
    }
  }

  for (const auto& [box_id, members] : foreground_by_box) {
    const Box2D* box = find_box(boxes, box_id);
    if (box == nullptr) {
      throw ArgumentError("point assigned to unknown box " + std::to_string(box_id));
    }
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(members.size());
    for (std::size_t i : members) {
      pts.push_back(frame.points[i].xyz());
    }
    const Components comps = ccl_cluster(pts, radii.for_class(box->class_id));
    const std::vector<std::size_t> keep = max_component(comps, pts);

    // Foreground points outside the largest cluster may be occluded parts of
    // the object; they are ignored rather than called background.
    for (std::size_t i : members) {
      out.semantic[i] = kIgnoreLabel;
    }
    for (std::size_t k : keep) {
      const std::size_t i = members[k];
      out.semantic[i] = box->class_id;
      out.instance[i] = box->box_id;
    }
  }
  return out;
}

}  // namespace wlf

#include "wlf/rsc.hpp"

#include "wlf/error.hpp"

namespace wlf {

void RscConfig::validate() const {
  if (!(t1 >= 0.0 && t1 <= 1.0 && t2 >= 0.0 && t2 <= 1.0)) {
    throw ConfigError("RSC thresholds must lie in [0, 1]");
  }
}

std::vector<std::int32_t> rsc_correct(std::span<const std::int32_t> pred,
                                      const RingSegments& segments, const RscConfig& cfg,
                                      int num_classes) {
  const std::size_t n = pred.size();
  if (segments.segment_id.size() != n) {
    throw ArgumentError("predictions and ring segments differ in length");
  }
  const auto num_segments = static_cast<std::size_t>(segments.num_segments);
  const auto stride = static_cast<std::size_t>(num_classes) + 1;

  // counts[s * stride + c]: points of segment s predicted as class c
  // (c = 0 is background). Labels outside 0..num_classes only add to size.
  std::vector<std::size_t> counts(num_segments * stride, 0);
  std::vector<std::size_t> size(num_segments, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(segments.segment_id[i]);
    ++size[s];
    if (pred[i] >= 0 && pred[i] <= num_classes) {
      ++counts[s * stride + static_cast<std::size_t>(pred[i])];
    }
  }

  // Class passes run in ascending order, so the last write to a segment wins.
  constexpr std::int32_t kUntouched = -2;
  std::vector<std::int32_t> write(num_segments, kUntouched);
  for (int cls = 1; cls <= num_classes; ++cls) {
    for (std::size_t s = 0; s < num_segments; ++s) {
      const std::size_t in_class = counts[s * stride + static_cast<std::size_t>(cls)];
      if (in_class == 0) {
        continue;
      }
      const double bg_ratio =
          static_cast<double>(counts[s * stride]) / static_cast<double>(in_class);
      const double class_share = static_cast<double>(in_class) / static_cast<double>(size[s]);
      if (bg_ratio > cfg.t1) {
        write[s] = kBackgroundClass;
      } else if (class_share > cfg.t2) {
        write[s] = cls;
      }
    }
  }

  std::vector<std::int32_t> out(pred.begin(), pred.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = write[static_cast<std::size_t>(segments.segment_id[i])];
    if (w != kUntouched) {
      out[i] = w;
    }
  }
  return out;
}

PseudoLabels apply_rsc(const PseudoLabels& labels, const RingSegments& segments,
                       const RscConfig& cfg, std::span<const Box2D> boxes, int num_classes) {
  PseudoLabels out = labels;
  out.semantic = rsc_correct(labels.semantic, segments, cfg, num_classes);
  reconcile_instances(out, boxes);
  return out;
}

}  // namespace wlf

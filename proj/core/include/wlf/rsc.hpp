#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wlf/dcs.hpp"
#include "wlf/frame.hpp"
#include "wlf/labels.hpp"

namespace wlf {

struct RscConfig {
  double t1 = 0.5;  // background / class ratio that flips a segment to background
  double t2 = 0.7;  // class share that flips a segment to the class

  void validate() const;
};

// Ring-segment vote over predicted classes. Classes 1..num_classes are
// visited in ascending order; counts always come from `pred`, writes go to
// the returned copy, so later classes may overwrite earlier ones.
std::vector<std::int32_t> rsc_correct(std::span<const std::int32_t> pred,
                                      const RingSegments& segments, const RscConfig& cfg,
                                      int num_classes = kNumClasses);

// rsc_correct on the semantic channel, then instance ids reconciled.
PseudoLabels apply_rsc(const PseudoLabels& labels, const RingSegments& segments,
                       const RscConfig& cfg, std::span<const Box2D> boxes,
                       int num_classes = kNumClasses);

}  // namespace wlf

#include "wlf/labels.hpp"

#include <string>

#include "wlf/error.hpp"

namespace wlf {

void check_label_invariants(const PseudoLabels& labels, std::span<const Box2D> boxes) {
  if (labels.semantic.size() != labels.instance.size()) {
    throw InvariantError("semantic and instance label lengths differ");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto sem = labels.semantic[i];
    const auto inst = labels.instance[i];
    if (sem < kIgnoreLabel || inst < 0) {
      throw InvariantError("point " + std::to_string(i) + ": label out of range");
    }
    if (sem == kIgnoreLabel && inst != 0) {
      throw InvariantError("point " + std::to_string(i) + ": ignored point carries an instance");
    }
    if (inst > 0) {
      const Box2D* box = find_box(boxes, inst);
      if (box == nullptr) {
        throw InvariantError("point " + std::to_string(i) + ": unknown instance " +
                             std::to_string(inst));
      }
      if (box->class_id != sem) {
        throw InvariantError("point " + std::to_string(i) + ": semantic " + std::to_string(sem) +
                             " disagrees with box class " + std::to_string(box->class_id));
      }
    }
  }
}

void reconcile_instances(PseudoLabels& labels, std::span<const Box2D> boxes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& inst = labels.instance[i];
    if (inst == 0) {
      continue;
    }
    const Box2D* box = find_box(boxes, inst);
    if (box == nullptr || box->class_id != labels.semantic[i]) {
      inst = 0;
    }
  }
}

}  // namespace wlf

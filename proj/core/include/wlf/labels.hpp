#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wlf/frame.hpp"

namespace wlf {

inline constexpr std::int8_t kTrinaryIgnore = -1;
inline constexpr std::int8_t kTrinaryBackground = 0;
inline constexpr std::int8_t kTrinaryForeground = 1;

// Per-point {-1, 0, 1} codes: ignore / background / foreground.
using TrinaryLabels = std::vector<std::int8_t>;

// Per-point semantic class in {-1, 0, ..., N_cls} and instance (box) id in
// {0, ..., N_box}. Instance > 0 implies the semantic equals the class of
// that box; semantic -1 implies instance 0.
struct PseudoLabels {
  std::vector<std::int32_t> semantic;
  std::vector<std::int32_t> instance;

  PseudoLabels() = default;
  explicit PseudoLabels(std::size_t n) : semantic(n, kBackgroundClass), instance(n, 0) {}

  std::size_t size() const { return semantic.size(); }
  friend bool operator==(const PseudoLabels&, const PseudoLabels&) = default;
};

// Throws InvariantError if `labels` breaks the instance/semantic coupling
// against `boxes`.
void check_label_invariants(const PseudoLabels& labels, std::span<const Box2D> boxes);

// Drops instance ids that no longer agree with their semantic class so the
// invariant holds after a semantic-only correction.
void reconcile_instances(PseudoLabels& labels, std::span<const Box2D> boxes);

}  // namespace wlf

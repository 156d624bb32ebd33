#include "wlf/ccl.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "wlf/error.hpp"

namespace wlf {
namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return;
    }
    if (rank_[a] < rank_[b]) {
      std::swap(a, b);
    }
    parent_[b] = a;
    if (rank_[a] == rank_[b]) {
      ++rank_[a];
    }
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct VoxelKey {
  std::int64_t x;
  std::int64_t y;
  std::int64_t z;
  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

double ClassRadii::for_class(std::int32_t class_id) const {
  if (class_id < 1 || static_cast<std::size_t>(class_id) > radius.size()) {
    throw ArgumentError("no clustering radius for class " + std::to_string(class_id));
  }
  return radius[static_cast<std::size_t>(class_id) - 1];
}

void ClassRadii::validate() const {
  if (radius.empty()) {
    throw ConfigError("class radii are empty");
  }
  for (double r : radius) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw ConfigError("class radii must be positive and finite");
    }
  }
}

Components ccl_cluster(std::span<const Eigen::Vector3d> points, double radius) {
  if (!(radius > 0.0)) {
    throw ArgumentError("CCL radius must be > 0");
  }
  const std::size_t n = points.size();
  // Slightly oversized cells so rounding in floor() never separates two
  // points that are within `radius` by more than one cell.
  const double edge = radius * (1.0 + 1e-9);
  const double r2 = radius * radius;

  std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash> grid;
  grid.reserve(n);
  std::vector<VoxelKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = points[i];
    keys[i] = {static_cast<std::int64_t>(std::floor(p.x() / edge)),
               static_cast<std::int64_t>(std::floor(p.y() / edge)),
               static_cast<std::int64_t>(std::floor(p.z() / edge))};
    grid[keys[i]].push_back(i);
  }

  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = keys[i];
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == grid.end()) {
            continue;
          }
          for (std::size_t j : it->second) {
            if (j > i && (points[i] - points[j]).squaredNorm() <= r2) {
              sets.unite(i, j);
            }
          }
        }
      }
    }
  }

  Components out;
  out.component_id.assign(n, -1);
  std::unordered_map<std::size_t, std::int32_t> root_to_id;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = root_to_id.try_emplace(root, static_cast<std::int32_t>(out.sizes.size()));
    if (inserted) {
      out.sizes.push_back(0);
    }
    out.component_id[i] = it->second;
    ++out.sizes[static_cast<std::size_t>(it->second)];
  }
  return out;
}

std::vector<std::size_t> max_component(const Components& comps,
                                       std::span<const Eigen::Vector3d> points) {
  if (points.empty() || comps.sizes.empty()) {
    throw EmptySelectionError("max_component on an empty point set");
  }
  if (comps.component_id.size() != points.size()) {
    throw ArgumentError("component ids and points differ in length");
  }
  std::vector<double> range_sum(comps.count(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    range_sum[static_cast<std::size_t>(comps.component_id[i])] += points[i].norm();
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < comps.count(); ++c) {
    if (comps.sizes[c] != comps.sizes[best]) {
      if (comps.sizes[c] > comps.sizes[best]) {
        best = c;
      }
      continue;
    }
    const double mean_c = range_sum[c] / static_cast<double>(comps.sizes[c]);
    const double mean_best = range_sum[best] / static_cast<double>(comps.sizes[best]);
    if (mean_c < mean_best) {
      best = c;
    }
  }
  std::vector<std::size_t> selected;
  selected.reserve(comps.sizes[best]);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<std::size_t>(comps.component_id[i]) == best) {
      selected.push_back(i);
    }
  }
  return selected;
}

}  // namespace wlf

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace wlf {

// Per-class clustering radius in metres, indexed by class id 1..N_cls.
struct ClassRadii {
  std::vector<double> radius{0.6, 0.1, 0.15};  // vehicle, pedestrian, cyclist

  double for_class(std::int32_t class_id) const;
  void validate() const;
};

struct Components {
  std::vector<std::int32_t> component_id;  // per point, dense
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.size(); }
};

// Connected components of the graph joining points at Euclidean distance
// <= radius. Neighbour search runs on a voxel grid with edge = radius.
// Component ids follow the order of each component's lowest point index.
Components ccl_cluster(std::span<const Eigen::Vector3d> points, double radius);

// Indices (ascending) of the largest component. Ties go to the component
// with the smaller mean range to the sensor, then the smaller id.
// Throws EmptySelectionError when there are no points.
std::vector<std::size_t> max_component(const Components& comps,
                                       std::span<const Eigen::Vector3d> points);

}  // namespace wlf

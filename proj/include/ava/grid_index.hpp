#pragma once

#include "ava/mesh.hpp"

namespace ava {

// Uniform grid over a point set for exact nearest-vertex queries.
// Ties are broken by lowest vertex index, matching a brute-force ascending
// scan with strict '<'.
class VertexGridIndex {
 public:
  VertexGridIndex() = default;
  explicit VertexGridIndex(const std::vector<Vec3>& points) { build(points); }
  void build(const std::vector<Vec3>& points);

  // Index of the exact nearest point.
  int nearest(const Vec3& q) const;

  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  int cell_of(const Vec3& p, int axis) const;

  std::vector<Vec3> points_;
  std::vector<std::vector<int>> cells_;  // each sorted ascending
  Vec3 origin_ = Vec3::Zero();
  double cell_size_ = 1.0;
  int nx_ = 0, ny_ = 0, nz_ = 0;
};

}  // namespace ava

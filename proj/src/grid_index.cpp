#include "ava/grid_index.hpp"

#include <cmath>

namespace ava {

void VertexGridIndex::build(const std::vector<Vec3>& points) {
  points_ = points;
  if (points_.empty()) return;
  Aabb box;
  for (const auto& p : points_) box.expand(p);
  const Vec3 ext = box.extent().cwiseMax(1e-9);
  // Aim for a handful of points per cell.
  const double target = std::cbrt(double(points_.size()) / 4.0);
  cell_size_ = std::max({ext.x(), ext.y(), ext.z()}) / std::max(1.0, target);
  origin_ = box.lo;
  nx_ = std::max(1, int(std::floor(ext.x() / cell_size_)) + 1);
  ny_ = std::max(1, int(std::floor(ext.y() / cell_size_)) + 1);
  nz_ = std::max(1, int(std::floor(ext.z() / cell_size_)) + 1);
  cells_.assign(size_t(nx_) * size_t(ny_) * size_t(nz_), {});
  for (int i = 0; i < int(points_.size()); ++i) {
    const int cx = cell_of(points_[size_t(i)], 0);
    const int cy = cell_of(points_[size_t(i)], 1);
    const int cz = cell_of(points_[size_t(i)], 2);
    cells_[size_t((cz * ny_ + cy) * nx_ + cx)].push_back(i);
  }
}

int VertexGridIndex::cell_of(const Vec3& p, int axis) const {
  const int n = axis == 0 ? nx_ : axis == 1 ? ny_ : nz_;
  const int c = int(std::floor((p[axis] - origin_[axis]) / cell_size_));
  return std::clamp(c, 0, n - 1);
}

int VertexGridIndex::nearest(const Vec3& q) const {
  const int cx = cell_of(q, 0), cy = cell_of(q, 1), cz = cell_of(q, 2);
  int best = -1;
  double best_d2 = std::numeric_limits<double>::max();
  const int max_ring = std::max({nx_, ny_, nz_});
  for (int ring = 0; ring <= max_ring; ++ring) {
    // Once a candidate is held, stop when the ring's closest possible
    // distance exceeds it.
    if (best >= 0) {
      const double ring_min = (double(ring) - 1.0) * cell_size_;
      if (ring_min > 0.0 && ring_min * ring_min > best_d2) break;
    }
    for (int dz = -ring; dz <= ring; ++dz) {
      const int z = cz + dz;
      if (z < 0 || z >= nz_) continue;
      for (int dy = -ring; dy <= ring; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= ny_) continue;
        for (int dx = -ring; dx <= ring; ++dx) {
          // Shell only.
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          const int x = cx + dx;
          if (x < 0 || x >= nx_) continue;
          for (int i : cells_[size_t((z * ny_ + y) * nx_ + x)]) {
            const double d2 = (points_[size_t(i)] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
              best_d2 = d2;
              best = i;
            }
          }
        }
      }
    }
  }
  return best;
}

}  // namespace ava

#pragma once

#include "ava/encoding.hpp"
#include "ava/mesh.hpp"

#include <functional>

namespace ava {

// Regular lattice of occupancy values; values[(z*ny + y)*nx + x].
struct VoxelGrid {
  int nx = 0, ny = 0, nz = 0;
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  std::vector<double> values;

  static VoxelGrid make(int nx, int ny, int nz, const Vec3& origin, double spacing) {
    VoxelGrid g{nx, ny, nz, origin, spacing, {}};
    g.values.assign(size_t(nx) * size_t(ny) * size_t(nz), 0.0);
    return g;
  }
  // Cube lattice spanning the canonical box, res points per axis.
  static VoxelGrid over_box(const CanonicalBox& box, int res) {
    return make(res, res, res, box.lo(), box.side() / double(res - 1));
  }

  double& at(int x, int y, int z) {
    return values[(size_t(z) * size_t(ny) + size_t(y)) * size_t(nx) + size_t(x)];
  }
  double at(int x, int y, int z) const {
    return values[(size_t(z) * size_t(ny) + size_t(y)) * size_t(nx) + size_t(x)];
  }
  Vec3 point(int x, int y, int z) const {
    return origin + spacing * Vec3(x, y, z);
  }
  bool valid() const {
    if (spacing <= 0.0) return false;
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Standard 256-case marching cubes with linear edge interpolation and shared
// edge vertices (watertight when the surface is interior to the grid).
// A lattice value is inside iff value > threshold, so a constant field at
// exactly the threshold produces no surface. Triangles are wound so normals
// point toward lower values. Throws EmptySurfaceError when no edge crosses.
TriMesh marching_cubes(const VoxelGrid& grid, double threshold = 0.5);

// Marching cubes over an analytic field: samples fn on the lattice, then
// sharpens each crossing vertex by bisection along its edge. Used by the
// body generator where the exact field is available.
TriMesh marching_cubes_field(const std::function<double(const Vec3&)>& fn,
                             const CanonicalBox& box, int res,
                             double threshold = 0.5, int refine_steps = 10);

}  // namespace ava

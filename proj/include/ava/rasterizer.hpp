#pragma once

#include "ava/camera.hpp"

namespace ava {

// Z-buffered raster targets. depth holds camera/view-frame z where covered,
// +inf elsewhere; normals are unit world-space vectors, zero elsewhere.
struct RasterOutput {
  int width = 0, height = 0;
  std::vector<double> depth;
  std::vector<uint8_t> mask;
  std::vector<Vec3> normal;

  size_t index(int x, int y) const { return size_t(y) * size_t(width) + size_t(x); }
};

// Software rasterization of a mesh with per-vertex normals through a pinhole
// camera. Perspective-correct depth and attribute interpolation; no culling,
// so silhouettes are solid regardless of orientation.
RasterOutput rasterize_perspective(const TriMesh& mesh, const Camera& camera);

// Orthographic view for metric rendering: world -> view rotation, the view
// volume is centered on `center` with the given half-extent, depth along +z.
struct OrthoView {
  Mat3 rot = Mat3::Identity();
  Vec3 center = Vec3::Zero();
  double half_extent = 1.0;
  int resolution = 512;
};

RasterOutput rasterize_ortho(const TriMesh& mesh, const OrthoView& view);

}  // namespace ava

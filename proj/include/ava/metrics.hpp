#pragma once

#include "ava/marching_cubes.hpp"
#include "ava/mesh.hpp"

namespace ava {

// Fixed default sampling seed; every evaluation logs the seed it used so
// reported numbers are reproducible.
constexpr uint64_t kMetricSeed = 0x5eedu;
constexpr int kMetricSamples = 100000;

// Symmetric mean surface distance in centimeters:
// 0.5 * (mean_{a in A} d(a, B) + mean_{b in B} d(b, A)), with exact
// point-to-triangle distances and area-weighted samples drawn with the same
// seed on both meshes (so chamfer(A,B) == chamfer(B,A) bit-exactly).
double chamfer_cm(const TriMesh& a, const TriMesh& b, int n_samples = kMetricSamples,
                  uint64_t seed = kMetricSeed);

// One-directional mean distance (cm) from recon surface samples to gt.
double p2s_cm(const TriMesh& recon, const TriMesh& gt, int n_samples = kMetricSamples,
              uint64_t seed = kMetricSeed);

// Mean per-pixel L2 difference of rendered world-space normals over the four
// canonical orthographic views (front/back/left/right), counted on pixels
// covered by both meshes and averaged over views.
double normal_error(const TriMesh& recon, const TriMesh& gt, int resolution = 512);

// Inside/outside by ray parity, majority over the three axis directions.
// The lattice spans the mesh bounds padded by one cell. Throws
// NonWatertightError for open meshes.
VoxelGrid voxelize(const TriMesh& mesh, int res);

// Same parity classification on an explicit lattice (for IoU against a
// reconstruction grid).
VoxelGrid voxelize_on(const TriMesh& mesh, int nx, int ny, int nz,
                      const Vec3& origin, double spacing);

// Volumetric IoU of two occupancy grids on the same lattice (> 0.5 = inside).
double grid_iou(const VoxelGrid& a, const VoxelGrid& b);

struct SampleMetrics {
  std::string id;
  double normal = 0.0;
  double p2s_cm = 0.0;
  double chamfer_cm = 0.0;
};

// The evaluation triple plus the per-sample breakdown behind the means.
struct MetricReport {
  double normal = 0.0;
  double p2s_cm = 0.0;
  double chamfer_cm = 0.0;
  uint64_t seed = kMetricSeed;
  std::vector<SampleMetrics> samples;

  static MetricReport from_samples(std::vector<SampleMetrics> samples, uint64_t seed);
  std::string to_json() const;  // deterministic serialization
  static MetricReport parse(const std::string& json_text);
};

}  // namespace ava

#pragma once

#include "ava/field.hpp"
#include "ava/metrics.hpp"

#include <filesystem>

namespace ava {

struct ReconstructOptions {
  int grid_res = 64;
  // Coarse-to-fine evaluation: the lattice is first probed at every other
  // index; cells whose corners are uniformly saturated (below band_lo or
  // above band_hi) are filled by interpolation, the rest evaluated exactly.
  bool hierarchical = true;
  double band_lo = 0.02;
  double band_hi = 0.98;
  int skin_export_res = 64;
};

struct ReconstructResult {
  TriMesh mesh;        // canonical avatar, 0.5 isosurface
  VoxelGrid grid;      // the occupancy lattice the surface came from
  int64_t field_evals = 0;
};

// Evaluates the occupancy field over a grid_res^3 lattice spanning the
// canonical box and extracts the 0.5 isosurface. Strictly above 0.5 counts
// as inside, so an untrained constant-0.5 field raises EmptySurfaceError.
ReconstructResult reconstruct(const FieldEvaluator& field,
                              const ReconstructOptions& opts = {});

// Dense skinning-field export (res^3 x K float32) in the shared tensor
// container, with the box and skeleton in the header for animation tools.
void export_skin_field(const FieldEvaluator& field, int res,
                       const std::filesystem::path& path);
// NN-Skin variant of the export (baseline comparison / crack metric).
void export_nn_skin_field(const TemplateModel& tmpl, const CanonicalBox& box,
                          const Skeleton& skeleton, int res,
                          const std::filesystem::path& path);

struct SkinFieldGrid {
  int res = 0;
  CanonicalBox box;
  Skeleton skeleton;
  std::vector<float> weights;  // res^3 * K, x-fastest

  SkinWeights sample(const Vec3& x) const;  // trilinear, renormalized
};
SkinFieldGrid load_skin_field(const std::filesystem::path& path);

}  // namespace ava

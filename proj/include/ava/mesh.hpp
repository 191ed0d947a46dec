#pragma once

#include "ava/common.hpp"

namespace ava {

// Convex weights over the K joints. Always kept on the simplex.
struct SkinWeights {
  Eigen::Matrix<double, kJoints, 1> w = Eigen::Matrix<double, kJoints, 1>::Zero();

  static SkinWeights one_hot(int k) {
    SkinWeights s;
    s.w[k] = 1.0;
    return s;
  }
  // Normalizes nonnegative raw weights onto the simplex.
  static SkinWeights normalized(const Eigen::Matrix<double, kJoints, 1>& raw);

  bool valid(double tol = 1e-6) const;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::max());
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
};

// Indexed triangle mesh in canonical-space meters. Normals and skin weights
// are optional (empty, or one entry per vertex).
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> normals;
  std::vector<SkinWeights> skin;

  bool has_normals() const { return normals.size() == vertices.size(); }
  bool has_skin() const { return skin.size() == vertices.size(); }
  bool empty() const { return vertices.empty() || faces.empty(); }
};

// Checks face indices, unit normals, and simplex weights where present.
bool mesh_valid(const TriMesh& m, std::string* why = nullptr);

// Area-weighted vertex normals recomputed from faces.
void compute_vertex_normals(TriMesh& m);

double surface_area(const TriMesh& m);
Aabb mesh_bounds(const TriMesh& m);
Vec3 mesh_centroid(const TriMesh& m);  // area-weighted surface centroid

// Every undirected edge shared by exactly two faces, with opposite
// orientation. Queryable property, not an invariant.
bool is_watertight(const TriMesh& m);

// Euler characteristic V - E + F with E counted over unique undirected edges.
long euler_characteristic(const TriMesh& m);

struct SurfaceSample {
  Vec3 position;
  int face;
  Vec3 barycentric;
};

// Area-weighted surface samples, deterministic in seed.
std::vector<SurfaceSample> sample_surface(const TriMesh& m, int n, uint64_t seed);

}  // namespace ava

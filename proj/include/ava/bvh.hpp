#pragma once

#include "ava/mesh.hpp"

namespace ava {

// Exact point-to-triangle distance; also returns the closest point.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* closest = nullptr);

// Moller ray/triangle intersection; returns hit parameter t >= 0.
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                  const Vec3& b, const Vec3& c, double* t_out,
                  Vec3* bary_out = nullptr);

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2);

// Median-split AABB tree over mesh triangles. Queries return exactly the
// same values a brute-force scan over all triangles would.
class TriangleBvh {
 public:
  TriangleBvh() = default;
  explicit TriangleBvh(const TriMesh& mesh) { build(mesh); }
  void build(const TriMesh& mesh);

  struct ClosestHit {
    double distance = std::numeric_limits<double>::max();
    Vec3 point = Vec3::Zero();
    int face = -1;
  };
  ClosestHit closest_point(const Vec3& p) const;

  struct RayHit {
    double t = std::numeric_limits<double>::max();
    int face = -1;
    Vec3 barycentric = Vec3::Zero();
  };
  // Nearest intersection along origin + t*dir, t > t_min.
  bool ray_nearest(const Vec3& origin, const Vec3& dir, RayHit* hit,
                   double t_min = 0.0) const;

  // All crossing parameters t > 0 (for parity tests).
  void ray_all(const Vec3& origin, const Vec3& dir, std::vector<double>* ts) const;

  // Faces whose AABB overlaps the query box.
  void overlapping(const Aabb& box, std::vector<int>* faces) const;

  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // internal
    int begin = 0, end = 0;     // leaf triangle range
    bool leaf() const { return left < 0; }
  };
  int build_range(int begin, int end, std::vector<Vec3>& centers);

  std::vector<Node> nodes_;
  std::vector<int> order_;  // triangle index permutation
  std::vector<std::array<Vec3, 3>> tris_;
  int root_ = -1;
};

}  // namespace ava

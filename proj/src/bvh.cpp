#include "ava/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace ava {

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* closest) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  Vec3 q;
  if (d1 <= 0.0 && d2 <= 0.0) {
    q = a;
  } else {
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) {
      q = b;
    } else {
      const double vc = d1 * d4 - d3 * d2;
      if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        q = a + (d1 / (d1 - d3)) * ab;
      } else {
        const Vec3 cp = p - c;
        const double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0.0 && d5 <= d6) {
          q = c;
        } else {
          const double vb = d5 * d2 - d1 * d6;
          if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
            q = a + (d2 / (d2 - d6)) * ac;
          } else {
            const double va = d3 * d6 - d5 * d4;
            if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
              q = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
            } else {
              const double denom = 1.0 / (va + vb + vc);
              q = a + (vb * denom) * ab + (vc * denom) * ac;
            }
          }
        }
      }
    }
  }
  if (closest) *closest = q;
  return (p - q).norm();
}

bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                  const Vec3& b, const Vec3& c, double* t_out, Vec3* bary_out) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(qvec) * inv;
  if (t_out) *t_out = t;
  if (bary_out) *bary_out = Vec3(1.0 - u - v, u, v);
  return true;
}

namespace {
// Interval of a triangle projected on an axis.
void project_axis(const Vec3& axis, const Vec3& a, const Vec3& b, const Vec3& c,
                  double* lo, double* hi) {
  const double pa = axis.dot(a), pb = axis.dot(b), pc = axis.dot(c);
  *lo = std::min({pa, pb, pc});
  *hi = std::max({pa, pb, pc});
}
}  // namespace

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2) {
  // Separating-axis test: 2 face normals + 9 edge cross products. A small
  // contact tolerance keeps grazing surfaces (tessellation slivers sharing a
  // lattice edge) from counting as interpenetration.
  constexpr double kContactTol = 2e-5;
  const Vec3 ea[3] = {a1 - a0, a2 - a1, a0 - a2};
  const Vec3 eb[3] = {b1 - b0, b2 - b1, b0 - b2};
  std::vector<Vec3> axes;
  axes.reserve(11);
  axes.push_back(ea[0].cross(ea[1]));
  axes.push_back(eb[0].cross(eb[1]));
  for (const auto& x : ea)
    for (const auto& y : eb) axes.push_back(x.cross(y));
  for (const auto& axis : axes) {
    const double len = axis.norm();
    if (len < 1e-10) continue;
    double alo, ahi, blo, bhi;
    project_axis(axis, a0, a1, a2, &alo, &ahi);
    project_axis(axis, b0, b1, b2, &blo, &bhi);
    if (ahi < blo + kContactTol * len || bhi < alo + kContactTol * len) return false;
  }
  return true;
}

void TriangleBvh::build(const TriMesh& mesh) {
  const int n = int(mesh.faces.size());
  tris_.resize(size_t(n));
  order_.resize(size_t(n));
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centers(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& f = mesh.faces[size_t(i)];
    tris_[size_t(i)] = {mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]};
    centers[size_t(i)] = (tris_[size_t(i)][0] + tris_[size_t(i)][1] + tris_[size_t(i)][2]) / 3.0;
  }
  nodes_.clear();
  nodes_.reserve(size_t(2 * n));
  root_ = n > 0 ? build_range(0, n, centers) : -1;
}

int TriangleBvh::build_range(int begin, int end, std::vector<Vec3>& centers) {
  Node node;
  for (int i = begin; i < end; ++i)
    for (const auto& v : tris_[size_t(order_[size_t(i)])]) node.box.expand(v);
  const int id = int(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 4) {
    nodes_[size_t(id)].begin = begin;
    nodes_[size_t(id)].end = end;
    return id;
  }
  int axis;
  node.box.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     if (centers[size_t(a)][axis] != centers[size_t(b)][axis])
                       return centers[size_t(a)][axis] < centers[size_t(b)][axis];
                     return a < b;
                   });
  const int l = build_range(begin, mid, centers);
  const int r = build_range(mid, end, centers);
  nodes_[size_t(id)].left = l;
  nodes_[size_t(id)].right = r;
  return id;
}

namespace {
double box_distance_sq(const Aabb& b, const Vec3& p) {
  const Vec3 d = (b.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - b.hi);
  return d.squaredNorm();
}

bool ray_box(const Aabb& b, const Vec3& o, const Vec3& inv_dir, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double ta = (b.lo[a] - o[a]) * inv_dir[a];
    double tb = (b.hi[a] - o[a]) * inv_dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}
}  // namespace

TriangleBvh::ClosestHit TriangleBvh::closest_point(const Vec3& p) const {
  ClosestHit best;
  if (root_ < 0) return best;
  int stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[size_t(stack[--top])];
    if (box_distance_sq(node.box, p) > best.distance * best.distance) continue;
    if (node.leaf()) {
      for (int i = node.begin; i < node.end; ++i) {
        const int tri = order_[size_t(i)];
        Vec3 q;
        const auto& t = tris_[size_t(tri)];
        const double d = point_triangle_distance(p, t[0], t[1], t[2], &q);
        if (d < best.distance || (d == best.distance && tri < best.face)) {
          best.distance = d;
          best.point = q;
          best.face = tri;
        }
      }
    } else {
      // Visit nearer child first.
      const double dl = box_distance_sq(nodes_[size_t(node.left)].box, p);
      const double dr = box_distance_sq(nodes_[size_t(node.right)].box, p);
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }
  return best;
}

bool TriangleBvh::ray_nearest(const Vec3& origin, const Vec3& dir, RayHit* hit,
                              double t_min) const {
  RayHit best;
  if (root_ < 0) return false;
  const Vec3 inv_dir = dir.cwiseInverse();
  int stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[size_t(stack[--top])];
    if (!ray_box(node.box, origin, inv_dir, best.t)) continue;
    if (node.leaf()) {
      for (int i = node.begin; i < node.end; ++i) {
        const int tri = order_[size_t(i)];
        const auto& t = tris_[size_t(tri)];
        double tt;
        Vec3 bary;
        if (ray_triangle(origin, dir, t[0], t[1], t[2], &tt, &bary) && tt > t_min &&
            tt < best.t) {
          best.t = tt;
          best.face = tri;
          best.barycentric = bary;
        }
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
  if (best.face < 0) return false;
  *hit = best;
  return true;
}

void TriangleBvh::ray_all(const Vec3& origin, const Vec3& dir,
                          std::vector<double>* ts) const {
  ts->clear();
  if (root_ < 0) return;
  const Vec3 inv_dir = dir.cwiseInverse();
  int stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[size_t(stack[--top])];
    if (!ray_box(node.box, origin, inv_dir, std::numeric_limits<double>::max()))
      continue;
    if (node.leaf()) {
      for (int i = node.begin; i < node.end; ++i) {
        const auto& t = tris_[size_t(order_[size_t(i)])];
        double tt;
        if (ray_triangle(origin, dir, t[0], t[1], t[2], &tt) && tt > 0.0)
          ts->push_back(tt);
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
  std::sort(ts->begin(), ts->end());
}

void TriangleBvh::overlapping(const Aabb& box, std::vector<int>* faces) const {
  faces->clear();
  if (root_ < 0) return;
  int stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[size_t(stack[--top])];
    if ((node.box.lo.array() > box.hi.array()).any() ||
        (node.box.hi.array() < box.lo.array()).any())
      continue;
    if (node.leaf()) {
      for (int i = node.begin; i < node.end; ++i) faces->push_back(order_[size_t(i)]);
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
}

}  // namespace ava

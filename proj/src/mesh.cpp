#include "ava/mesh.hpp"

#include "ava/rng.hpp"

#include <map>
#include <numeric>

namespace ava {

SkinWeights SkinWeights::normalized(const Eigen::Matrix<double, kJoints, 1>& raw) {
  SkinWeights s;
  const double sum = raw.sum();
  if (!(sum > 0.0)) throw Error("SkinWeights: nonpositive weight sum");
  s.w = raw / sum;
  return s;
}

bool SkinWeights::valid(double tol) const {
  if ((w.array() < 0.0).any()) return false;
  return std::abs(w.sum() - 1.0) <= tol;
}

bool mesh_valid(const TriMesh& m, std::string* why) {
  const int nv = int(m.vertices.size());
  for (const auto& f : m.faces)
    for (int i : f)
      if (i < 0 || i >= nv) {
        if (why) *why = "face index out of range";
        return false;
      }
  if (!m.normals.empty() && m.normals.size() != m.vertices.size()) {
    if (why) *why = "normal count mismatch";
    return false;
  }
  for (const auto& n : m.normals)
    if (std::abs(n.norm() - 1.0) > 1e-6) {
      if (why) *why = "non-unit normal";
      return false;
    }
  if (!m.skin.empty() && m.skin.size() != m.vertices.size()) {
    if (why) *why = "skin weight count mismatch";
    return false;
  }
  for (const auto& s : m.skin)
    if (!s.valid()) {
      if (why) *why = "skin weights off the simplex";
      return false;
    }
  return true;
}

void compute_vertex_normals(TriMesh& m) {
  m.normals.assign(m.vertices.size(), Vec3::Zero());
  for (const auto& f : m.faces) {
    const Vec3 n = (m.vertices[f[1]] - m.vertices[f[0]])
                       .cross(m.vertices[f[2]] - m.vertices[f[0]]);
    for (int i : f) m.normals[i] += n;  // area-weighted
  }
  for (auto& n : m.normals) {
    const double len = n.norm();
    n = len > 1e-20 ? Vec3(n / len) : Vec3(0, 0, 1);
  }
}

double surface_area(const TriMesh& m) {
  double a = 0.0;
  for (const auto& f : m.faces)
    a += 0.5 * (m.vertices[f[1]] - m.vertices[f[0]])
                   .cross(m.vertices[f[2]] - m.vertices[f[0]])
                   .norm();
  return a;
}

Aabb mesh_bounds(const TriMesh& m) {
  Aabb b;
  for (const auto& v : m.vertices) b.expand(v);
  return b;
}

Vec3 mesh_centroid(const TriMesh& m) {
  Vec3 c = Vec3::Zero();
  double area = 0.0;
  for (const auto& f : m.faces) {
    const double a = 0.5 * (m.vertices[f[1]] - m.vertices[f[0]])
                               .cross(m.vertices[f[2]] - m.vertices[f[0]])
                               .norm();
    c += a * (m.vertices[f[0]] + m.vertices[f[1]] + m.vertices[f[2]]) / 3.0;
    area += a;
  }
  return area > 0 ? Vec3(c / area) : Vec3::Zero();
}

namespace {
// Undirected edge -> (count, net orientation).
std::map<std::pair<int, int>, std::pair<int, int>> edge_table(const TriMesh& m) {
  std::map<std::pair<int, int>, std::pair<int, int>> edges;
  for (const auto& f : m.faces) {
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      const int dir = a < b ? 1 : -1;
      if (a > b) std::swap(a, b);
      auto& ent = edges[{a, b}];
      ent.first += 1;
      ent.second += dir;
    }
  }
  return edges;
}
}  // namespace

bool is_watertight(const TriMesh& m) {
  if (m.empty()) return false;
  for (const auto& [edge, ent] : edge_table(m))
    if (ent.first != 2 || ent.second != 0) return false;
  return true;
}

long euler_characteristic(const TriMesh& m) {
  const auto edges = edge_table(m);
  return long(m.vertices.size()) - long(edges.size()) + long(m.faces.size());
}

std::vector<SurfaceSample> sample_surface(const TriMesh& m, int n, uint64_t seed) {
  std::vector<double> cum(m.faces.size());
  double total = 0.0;
  for (size_t i = 0; i < m.faces.size(); ++i) {
    const auto& f = m.faces[i];
    total += 0.5 * (m.vertices[f[1]] - m.vertices[f[0]])
                       .cross(m.vertices[f[2]] - m.vertices[f[0]])
                       .norm();
    cum[i] = total;
  }
  if (!(total > 0.0)) throw DegenerateMeshError("sample_surface: zero total area");

  RngStream rng = derive_stream(seed, "surface-sample");
  std::vector<SurfaceSample> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double target = rng.uniform() * total;
    const size_t face =
        size_t(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
    const auto& f = m.faces[std::min(face, m.faces.size() - 1)];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3 bary(1.0 - u - v, u, v);
    out[size_t(i)] = {bary[0] * m.vertices[f[0]] + bary[1] * m.vertices[f[1]] +
                          bary[2] * m.vertices[f[2]],
                      int(std::min(face, m.faces.size() - 1)), bary};
  }
  return out;
}

}  // namespace ava

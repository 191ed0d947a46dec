#include "ava/rasterizer.hpp"

namespace ava {

namespace {

RasterOutput make_target(int w, int h) {
  RasterOutput out;
  out.width = w;
  out.height = h;
  out.depth.assign(size_t(w) * size_t(h), std::numeric_limits<double>::infinity());
  out.mask.assign(size_t(w) * size_t(h), 0);
  out.normal.assign(size_t(w) * size_t(h), Vec3::Zero());
  return out;
}

inline double edge_fn(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

RasterOutput rasterize_perspective(const TriMesh& mesh, const Camera& camera) {
  if (!mesh.has_normals()) throw Error("rasterize: mesh needs vertex normals");
  RasterOutput out = make_target(camera.width, camera.height);

  std::vector<Vec3> cam_pts(mesh.vertices.size());
  std::vector<Vec2> screen(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam_pts[i] = camera.to_camera(mesh.vertices[i]);
    const double z = cam_pts[i].z();
    if (z > 1e-6)
      screen[i] = Vec2(camera.fx * cam_pts[i].x() / z + camera.cx,
                       camera.fy * cam_pts[i].y() / z + camera.cy);
  }

  for (const auto& f : mesh.faces) {
    if (cam_pts[f[0]].z() <= 1e-6 || cam_pts[f[1]].z() <= 1e-6 ||
        cam_pts[f[2]].z() <= 1e-6)
      continue;
    const Vec2 &s0 = screen[f[0]], &s1 = screen[f[1]], &s2 = screen[f[2]];
    double area = edge_fn(s0, s1, s2);
    if (area == 0.0) continue;
    const int x0 = std::max(0, int(std::floor(std::min({s0.x(), s1.x(), s2.x()}))));
    const int x1 = std::min(camera.width - 1,
                            int(std::ceil(std::max({s0.x(), s1.x(), s2.x()}))));
    const int y0 = std::max(0, int(std::floor(std::min({s0.y(), s1.y(), s2.y()}))));
    const int y1 = std::min(camera.height - 1,
                            int(std::ceil(std::max({s0.y(), s1.y(), s2.y()}))));
    const double inv_z[3] = {1.0 / cam_pts[f[0]].z(), 1.0 / cam_pts[f[1]].z(),
                             1.0 / cam_pts[f[2]].z()};
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        double w0 = edge_fn(s1, s2, p), w1 = edge_fn(s2, s0, p), w2 = edge_fn(s0, s1, p);
        if (area < 0) {
          w0 = -w0;
          w1 = -w1;
          w2 = -w2;
        }
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double denom = w0 + w1 + w2;
        if (denom == 0.0) continue;
        const double b0 = w0 / denom, b1 = w1 / denom, b2 = w2 / denom;
        const double zi = b0 * inv_z[0] + b1 * inv_z[1] + b2 * inv_z[2];
        const double z = 1.0 / zi;
        const size_t px = out.index(x, y);
        if (z >= out.depth[px]) continue;
        out.depth[px] = z;
        out.mask[px] = 1;
        Vec3 n = (b0 * inv_z[0] * mesh.normals[f[0]] + b1 * inv_z[1] * mesh.normals[f[1]] +
                  b2 * inv_z[2] * mesh.normals[f[2]]) *
                 z;
        const double len = n.norm();
        out.normal[px] = len > 1e-12 ? Vec3(n / len) : Vec3::Zero();
      }
    }
  }
  return out;
}

RasterOutput rasterize_ortho(const TriMesh& mesh, const OrthoView& view) {
  if (!mesh.has_normals()) throw Error("rasterize: mesh needs vertex normals");
  const int res = view.resolution;
  RasterOutput out = make_target(res, res);
  const double scale = res / (2.0 * view.half_extent);

  std::vector<Vec3> vp(mesh.vertices.size());
  std::vector<Vec2> screen(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    vp[i] = view.rot * (mesh.vertices[i] - view.center);
    screen[i] = Vec2((vp[i].x() + view.half_extent) * scale,
                     (vp[i].y() + view.half_extent) * scale);
  }

  for (const auto& f : mesh.faces) {
    const Vec2 &s0 = screen[f[0]], &s1 = screen[f[1]], &s2 = screen[f[2]];
    double area = edge_fn(s0, s1, s2);
    if (area == 0.0) continue;
    const int x0 = std::max(0, int(std::floor(std::min({s0.x(), s1.x(), s2.x()}))));
    const int x1 = std::min(res - 1, int(std::ceil(std::max({s0.x(), s1.x(), s2.x()}))));
    const int y0 = std::max(0, int(std::floor(std::min({s0.y(), s1.y(), s2.y()}))));
    const int y1 = std::min(res - 1, int(std::ceil(std::max({s0.y(), s1.y(), s2.y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        double w0 = edge_fn(s1, s2, p), w1 = edge_fn(s2, s0, p), w2 = edge_fn(s0, s1, p);
        if (area < 0) {
          w0 = -w0;
          w1 = -w1;
          w2 = -w2;
        }
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double denom = w0 + w1 + w2;
        if (denom == 0.0) continue;
        const double b0 = w0 / denom, b1 = w1 / denom, b2 = w2 / denom;
        const double z = b0 * vp[f[0]].z() + b1 * vp[f[1]].z() + b2 * vp[f[2]].z();
        const size_t px = out.index(x, y);
        if (z >= out.depth[px]) continue;
        out.depth[px] = z;
        out.mask[px] = 1;
        Vec3 n = b0 * mesh.normals[f[0]] + b1 * mesh.normals[f[1]] +
                 b2 * mesh.normals[f[2]];
        const double len = n.norm();
        out.normal[px] = len > 1e-12 ? Vec3(n / len) : Vec3::Zero();
      }
    }
  }
  return out;
}

}  // namespace ava

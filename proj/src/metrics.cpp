#include "ava/metrics.hpp"

#include "ava/bvh.hpp"
#include "ava/parallel.hpp"
#include "ava/rasterizer.hpp"

#include <json.hpp>

namespace ava {

namespace {

double mean_distance_to(const std::vector<SurfaceSample>& samples,
                        const TriangleBvh& bvh) {
  const double total = par_sum(int64_t(samples.size()), [&](int64_t i) {
    return bvh.closest_point(samples[size_t(i)].position).distance;
  });
  return total / double(samples.size());
}

void require_area(const TriMesh& m, const char* op) {
  if (m.empty() || !(surface_area(m) > 0.0))
    throw DegenerateMeshError(std::string(op) + ": mesh has no area");
}

}  // namespace

double chamfer_cm(const TriMesh& a, const TriMesh& b, int n_samples, uint64_t seed) {
  require_area(a, "chamfer");
  require_area(b, "chamfer");
  const auto sa = sample_surface(a, n_samples, seed);
  const auto sb = sample_surface(b, n_samples, seed);
  const TriangleBvh bvh_a(a), bvh_b(b);
  const double ab = mean_distance_to(sa, bvh_b);
  const double ba = mean_distance_to(sb, bvh_a);
  return 100.0 * 0.5 * (ab + ba);
}

double p2s_cm(const TriMesh& recon, const TriMesh& gt, int n_samples, uint64_t seed) {
  require_area(recon, "p2s");
  require_area(gt, "p2s");
  const auto samples = sample_surface(recon, n_samples, seed);
  const TriangleBvh bvh(gt);
  return 100.0 * mean_distance_to(samples, bvh);
}

double normal_error(const TriMesh& recon, const TriMesh& gt, int resolution) {
  require_area(recon, "normal_error");
  require_area(gt, "normal_error");
  TriMesh r = recon, g = gt;
  if (!r.has_normals()) compute_vertex_normals(r);
  if (!g.has_normals()) compute_vertex_normals(g);

  // Shared framing so both renders cover the same region.
  Aabb box = mesh_bounds(g);
  for (const auto& v : r.vertices) box.expand(v);
  OrthoView view;
  view.center = box.center();
  view.half_extent = 0.55 * box.extent().maxCoeff();
  view.resolution = resolution;

  // Front / back / left / right around the vertical axis.
  const double yaws[4] = {0.0, EIGEN_PI, EIGEN_PI / 2, -EIGEN_PI / 2};
  double total = 0.0;
  for (double yaw : yaws) {
    // View frame: x right, y up in world, z toward the camera's far side.
    Mat3 rot;
    rot.row(0) = Vec3(std::cos(yaw), 0, -std::sin(yaw));
    rot.row(1) = Vec3(0, 1, 0);
    rot.row(2) = Vec3(std::sin(yaw), 0, std::cos(yaw));
    view.rot = rot;
    const RasterOutput ra = rasterize_ortho(r, view);
    const RasterOutput rb = rasterize_ortho(g, view);
    double sum = 0.0;
    int64_t covered = 0;
    for (size_t i = 0; i < ra.mask.size(); ++i) {
      if (ra.mask[i] && rb.mask[i]) {
        sum += (ra.normal[i] - rb.normal[i]).norm();
        ++covered;
      }
    }
    if (covered > 0) total += sum / double(covered);
  }
  return total / 4.0;
}

namespace {

VoxelGrid parity_voxelize(const TriMesh& mesh, int nx, int ny, int nz,
                          const Vec3& origin, double spacing) {
  const TriangleBvh bvh(mesh);
  VoxelGrid grid = VoxelGrid::make(nx, ny, nz, origin, spacing);
  // One ray per axis through each voxel-center line; vote on parity.
  std::vector<int8_t> votes(grid.values.size(), 0);

  struct AxisSpec {
    int axis, u_axis, v_axis;
  };
  const AxisSpec axes[3] = {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}};
  for (const auto& spec : axes) {
    const int nu = spec.u_axis == 0 ? nx : spec.u_axis == 1 ? ny : nz;
    const int nv = spec.v_axis == 0 ? nx : spec.v_axis == 1 ? ny : nz;
    const int na = spec.axis == 0 ? nx : spec.axis == 1 ? ny : nz;
    par_for(int64_t(nu) * nv, [&](int64_t uv) {
      const int u = int(uv % nu);
      const int v = int(uv / nu);
      Vec3 o = origin;
      o[spec.u_axis] += spacing * u;
      o[spec.v_axis] += spacing * v;
      o[spec.axis] -= spacing;  // start outside
      Vec3 dir = Vec3::Zero();
      dir[spec.axis] = 1.0;
      std::vector<double> ts;
      bvh.ray_all(o, dir, &ts);
      // March voxel centers along the ray, counting crossings passed.
      size_t crossing = 0;
      for (int a = 0; a < na; ++a) {
        const double t = spacing * (a + 1);
        while (crossing < ts.size() && ts[crossing] < t) ++crossing;
        if (crossing % 2 == 1) {
          int idx[3];
          idx[spec.axis] = a;
          idx[spec.u_axis] = u;
          idx[spec.v_axis] = v;
          votes[(size_t(idx[2]) * size_t(ny) + size_t(idx[1])) * size_t(nx) +
                size_t(idx[0])] += 1;
        }
      }
    });
  }
  for (size_t i = 0; i < grid.values.size(); ++i)
    grid.values[i] = votes[i] >= 2 ? 1.0 : 0.0;
  return grid;
}

}  // namespace

VoxelGrid voxelize(const TriMesh& mesh, int res) {
  if (mesh.empty()) throw DegenerateMeshError("voxelize: empty mesh");
  if (!is_watertight(mesh)) throw NonWatertightError("voxelize: open mesh");
  const Aabb box = mesh_bounds(mesh);
  const double spacing = box.extent().maxCoeff() / double(res - 2);
  const Vec3 origin = box.center() - 0.5 * spacing * Vec3(res - 1, res - 1, res - 1);
  return parity_voxelize(mesh, res, res, res, origin, spacing);
}

VoxelGrid voxelize_on(const TriMesh& mesh, int nx, int ny, int nz,
                      const Vec3& origin, double spacing) {
  if (mesh.empty()) throw DegenerateMeshError("voxelize: empty mesh");
  if (!is_watertight(mesh)) throw NonWatertightError("voxelize: open mesh");
  return parity_voxelize(mesh, nx, ny, nz, origin, spacing);
}

double grid_iou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.values.size() != b.values.size()) throw ShapeMismatchError("grid_iou");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const bool ia = a.values[i] > 0.5, ib = b.values[i] > 0.5;
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

MetricReport MetricReport::from_samples(std::vector<SampleMetrics> samples,
                                        uint64_t seed) {
  MetricReport r;
  r.seed = seed;
  r.samples = std::move(samples);
  if (!r.samples.empty()) {
    for (const auto& s : r.samples) {
      r.normal += s.normal;
      r.p2s_cm += s.p2s_cm;
      r.chamfer_cm += s.chamfer_cm;
    }
    r.normal /= double(r.samples.size());
    r.p2s_cm /= double(r.samples.size());
    r.chamfer_cm /= double(r.samples.size());
  }
  return r;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["seed"] = seed;
  j["normal"] = normal;
  j["p2s_cm"] = p2s_cm;
  j["chamfer_cm"] = chamfer_cm;
  auto arr = nlohmann::json::array();
  for (const auto& s : samples)
    arr.push_back({{"id", s.id},
                   {"normal", s.normal},
                   {"p2s_cm", s.p2s_cm},
                   {"chamfer_cm", s.chamfer_cm}});
  j["samples"] = arr;
  return j.dump(2) + "\n";
}

MetricReport MetricReport::parse(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricReport r;
  r.seed = j["seed"].get<uint64_t>();
  r.normal = j["normal"].get<double>();
  r.p2s_cm = j["p2s_cm"].get<double>();
  r.chamfer_cm = j["chamfer_cm"].get<double>();
  for (const auto& s : j["samples"]) {
    r.samples.push_back({s["id"].get<std::string>(), s["normal"].get<double>(),
                         s["p2s_cm"].get<double>(), s["chamfer_cm"].get<double>()});
  }
  return r;
}

}  // namespace ava

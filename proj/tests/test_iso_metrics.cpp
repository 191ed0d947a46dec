#include <doctest.h>

#include "ava/bvh.hpp"
#include "ava/marching_cubes.hpp"
#include "ava/metrics.hpp"
#include "ava/rasterizer.hpp"
#include "ava/rng.hpp"

using namespace ava;

namespace {

VoxelGrid sphere_grid(double radius, int res, double box_side) {
  const CanonicalBox box{Vec3::Zero(), box_side / 2.0};
  VoxelGrid g = VoxelGrid::over_box(box, res);
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x)
        g.at(x, y, z) = g.point(x, y, z).norm() < radius ? 1.0 : 0.0;
  return g;
}

VoxelGrid sphere_sdf_grid(double radius, int res, double box_side) {
  // Smooth occupancy so edge interpolation lands on the true surface.
  const CanonicalBox box{Vec3::Zero(), box_side / 2.0};
  VoxelGrid g = VoxelGrid::over_box(box, res);
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x)
        g.at(x, y, z) = 0.5 + (radius - g.point(x, y, z).norm());
  return g;
}

TriMesh random_soup(RngStream& rng, int n_tris, double scale = 1.0) {
  TriMesh m;
  for (int i = 0; i < n_tris * 3; ++i) m.vertices.push_back(rng.normal_vec3() * scale);
  for (int i = 0; i < n_tris; ++i) m.faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  return m;
}

// Axis-aligned unit square pair (z = 0 and z = d), each two triangles.
TriMesh square_at_z(double z) {
  TriMesh m;
  m.vertices = {Vec3(0, 0, z), Vec3(1, 0, z), Vec3(1, 1, z), Vec3(0, 1, z)};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

double brute_chamfer_cm(const TriMesh& a, const TriMesh& b, int n, uint64_t seed) {
  auto dir = [](const TriMesh& from, const TriMesh& to, int n, uint64_t seed) {
    const auto samples = sample_surface(from, n, seed);
    double sum = 0.0;
    for (const auto& s : samples) {
      double best = std::numeric_limits<double>::max();
      for (const auto& f : to.faces)
        best = std::min(best,
                        point_triangle_distance(s.position, to.vertices[f[0]],
                                                to.vertices[f[1]], to.vertices[f[2]]));
      sum += best;
    }
    return sum / double(n);
  };
  return 100.0 * 0.5 * (dir(a, b, n, seed) + dir(b, a, n, seed));
}

}  // namespace

TEST_CASE("marching cubes sphere: area, watertight, euler characteristic, orientation") {
  const double r = 0.5;
  const VoxelGrid g = sphere_sdf_grid(r, 64, 2.0);
  const TriMesh mesh = marching_cubes(g, 0.5);

  const double area = surface_area(mesh);
  CHECK(area == doctest::Approx(4.0 * EIGEN_PI * r * r).epsilon(0.02));
  CHECK(is_watertight(mesh));
  CHECK(euler_characteristic(mesh) == 2);

  // Outward orientation: face normals point toward lower occupancy (outside).
  double aligned = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3 c =
        (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                       .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    aligned += n.dot(c) > 0 ? 1.0 : -1.0;
  }
  CHECK(aligned == doctest::Approx(double(mesh.faces.size())));
}

TEST_CASE("marching cubes: constant field below threshold is empty") {
  VoxelGrid g = VoxelGrid::make(8, 8, 8, Vec3::Zero(), 0.1);
  std::fill(g.values.begin(), g.values.end(), 0.2);
  CHECK_THROWS_AS(marching_cubes(g, 0.5), EmptySurfaceError);
  // Constant exactly at the threshold crosses nowhere either.
  std::fill(g.values.begin(), g.values.end(), 0.5);
  CHECK_THROWS_AS(marching_cubes(g, 0.5), EmptySurfaceError);
}

TEST_CASE("marching cubes: single interior super-threshold vertex") {
  VoxelGrid g = VoxelGrid::make(5, 5, 5, Vec3::Zero(), 1.0);
  g.at(2, 2, 2) = 1.0;
  const TriMesh mesh = marching_cubes(g, 0.5);
  CHECK(is_watertight(mesh));
  CHECK(euler_characteristic(mesh) == 2);
  // Table-walk oracle: the hot vertex is a corner of 8 cells, each with
  // exactly one inside corner, which the table maps to a single triangle.
  CHECK(mesh.faces.size() == 8);
}

TEST_CASE("chamfer: self distance is zero, identical meshes") {
  RngStream rng(5);
  const TriMesh m = random_soup(rng, 30);
  CHECK(chamfer_cm(m, m, 2000, 9) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("chamfer: parallel unit squares 1 cm apart") {
  const TriMesh a = square_at_z(0.0);
  const TriMesh b = square_at_z(0.01);
  CHECK(chamfer_cm(a, b, 20000, 11) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("chamfer: matches brute-force double loop exactly") {
  RngStream rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    const TriMesh a = random_soup(rng, 50);
    const TriMesh b = random_soup(rng, 50);
    const uint64_t seed = 100 + uint64_t(trial);
    const double fast = chamfer_cm(a, b, 500, seed);
    const double brute = brute_chamfer_cm(a, b, 500, seed);
    CHECK(fast == brute);
    // Symmetric bit-for-bit.
    CHECK(chamfer_cm(b, a, 500, seed) == fast);
  }
}

TEST_CASE("chamfer: degenerate mesh raises") {
  TriMesh degenerate;
  degenerate.vertices = {Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0)};
  degenerate.faces = {{0, 1, 2}};
  const TriMesh ok = square_at_z(0);
  CHECK_THROWS_AS(chamfer_cm(degenerate, ok, 100, 1), DegenerateMeshError);
}

TEST_CASE("p2s: zero self distance, offset spheres, asymmetry") {
  const double r = 0.5, offset = 0.005;
  const TriMesh inner = marching_cubes(sphere_sdf_grid(r - offset, 96, 2.0), 0.5);
  const TriMesh outer = marching_cubes(sphere_sdf_grid(r, 96, 2.0), 0.5);

  CHECK(p2s_cm(inner, inner, 5000, 3) == doctest::Approx(0.0).epsilon(1e-6));
  const double in_to_out = p2s_cm(inner, outer, 20000, 3);
  CHECK(in_to_out == doctest::Approx(0.5).epsilon(0.05));
  // Not symmetric in general; swapped direction differs measurably.
  const double out_to_in = p2s_cm(outer, inner, 20000, 3);
  CHECK(in_to_out != out_to_in);
}

TEST_CASE("normal error: identical meshes, flipped normals") {
  const TriMesh sphere = marching_cubes(sphere_sdf_grid(0.5, 48, 2.0), 0.5);
  CHECK(normal_error(sphere, sphere, 256) == doctest::Approx(0.0).epsilon(1e-6));

  TriMesh flipped = sphere;
  for (auto& n : flipped.normals) n = -n;
  CHECK(normal_error(flipped, sphere, 256) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("normal error: probe pixels match a ray-cast oracle") {
  const TriMesh sphere = marching_cubes(sphere_sdf_grid(0.45, 48, 2.0), 0.5);
  Aabb box = mesh_bounds(sphere);
  OrthoView view;
  view.center = box.center();
  view.half_extent = 0.55 * box.extent().maxCoeff();
  view.resolution = 128;
  const RasterOutput img = rasterize_ortho(sphere, view);

  const TriangleBvh bvh(sphere);
  RngStream rng(17);
  int checked = 0;
  while (checked < 10) {
    const int x = rng.uniform_int(view.resolution);
    const int y = rng.uniform_int(view.resolution);
    if (!img.mask[img.index(x, y)]) continue;
    // Cast the matching ortho ray (view z toward increasing depth).
    const double scale = 2.0 * view.half_extent / view.resolution;
    const Vec3 pix_view((x + 0.5) * scale - view.half_extent,
                        (y + 0.5) * scale - view.half_extent, -10.0);
    const Vec3 origin = view.rot.transpose() * pix_view + view.center;
    const Vec3 dir = view.rot.row(2).transpose();
    TriangleBvh::RayHit hit;
    REQUIRE(bvh.ray_nearest(origin, dir, &hit));
    const auto& f = sphere.faces[size_t(hit.face)];
    Vec3 n = hit.barycentric[0] * sphere.normals[f[0]] +
             hit.barycentric[1] * sphere.normals[f[1]] +
             hit.barycentric[2] * sphere.normals[f[2]];
    n.normalize();
    CHECK((img.normal[img.index(x, y)] - n).norm() < 1e-6);
    ++checked;
  }
}

TEST_CASE("voxelize: unit cube and sphere volumes, error paths") {
  // Unit cube via marching cubes on a box occupancy.
  const CanonicalBox box{Vec3::Zero(), 1.0};
  auto cube_field = [](const Vec3& p) {
    const Vec3 d = p.cwiseAbs() - Vec3::Constant(0.5);
    return 0.5 - d.maxCoeff();
  };
  const TriMesh cube = marching_cubes_field(cube_field, box, 64, 0.5, 12);
  REQUIRE(is_watertight(cube));
  const VoxelGrid vg = voxelize(cube, 32);
  double filled = 0.0;
  for (double v : vg.values) filled += v;
  const double cell = vg.spacing;
  CHECK(filled * cell * cell * cell == doctest::Approx(1.0).epsilon(0.1));

  const TriMesh sphere = marching_cubes(sphere_sdf_grid(0.5, 64, 2.0), 0.5);
  const VoxelGrid sg = voxelize(sphere, 48);
  double sphere_filled = 0.0;
  for (double v : sg.values) sphere_filled += v;
  const double vol = sphere_filled * sg.spacing * sg.spacing * sg.spacing;
  CHECK(vol == doctest::Approx(4.0 / 3.0 * EIGEN_PI * 0.125).epsilon(0.03));

  TriMesh empty;
  CHECK_THROWS_AS(voxelize(empty, 16), DegenerateMeshError);
  TriMesh open = square_at_z(0);
  CHECK_THROWS_AS(voxelize(open, 16), NonWatertightError);
}

TEST_CASE("metrics invariant under identical rigid transforms") {
  RngStream rng(23);
  const TriMesh sphere = marching_cubes(sphere_sdf_grid(0.4, 40, 2.0), 0.5);
  const TriMesh blob = marching_cubes(sphere_sdf_grid(0.45, 40, 2.0), 0.5);
  const double before = chamfer_cm(sphere, blob, 5000, 7);
  const double p_before = p2s_cm(sphere, blob, 5000, 7);

  const Mat3 rot = Quat(Eigen::AngleAxisd(0.7, rng.unit_vec3())).toRotationMatrix();
  const Vec3 t = rng.normal_vec3();
  auto moved = [&](TriMesh m) {
    for (auto& v : m.vertices) v = rot * v + t;
    for (auto& n : m.normals) n = rot * n;
    return m;
  };
  const TriMesh a = moved(sphere), b = moved(blob);
  CHECK(chamfer_cm(a, b, 5000, 7) == doctest::Approx(before).epsilon(1e-6));
  CHECK(p2s_cm(a, b, 5000, 7) == doctest::Approx(p_before).epsilon(1e-6));
}

TEST_CASE("metric report: means equal sample means, deterministic json") {
  std::vector<SampleMetrics> samples = {{"s0", 0.1, 1.0, 2.0}, {"s1", 0.3, 3.0, 4.0}};
  const MetricReport r = MetricReport::from_samples(samples, 42);
  CHECK(r.normal == doctest::Approx(0.2));
  CHECK(r.p2s_cm == doctest::Approx(2.0));
  CHECK(r.chamfer_cm == doctest::Approx(3.0));
  const std::string j1 = r.to_json();
  const MetricReport parsed = MetricReport::parse(j1);
  CHECK(parsed.to_json() == j1);
}

#include <doctest.h>

#include "ava/bvh.hpp"
#include "ava/camera.hpp"
#include "ava/encoding.hpp"
#include "ava/grid_index.hpp"
#include "ava/mesh_io.hpp"
#include "ava/rng.hpp"
#include "ava/skeleton.hpp"

#include <filesystem>

using namespace ava;

namespace {

Skeleton two_joint_chain() {
  Skeleton s;
  s.joints.fill(Vec3(100, 100, 100));  // park unused joints far away
  s.parents.fill(0);
  s.parents[0] = -1;
  s.joints[0] = Vec3::Zero();
  s.joints[1] = Vec3(1, 0, 0);
  return s;
}

Skeleton random_chain(RngStream& rng) {
  Skeleton s;
  s.parents[0] = -1;
  s.joints[0] = rng.normal_vec3() * 0.1;
  for (int k = 1; k < kJoints; ++k) {
    s.parents[k] = rng.uniform_int(k);
    s.joints[k] = s.joints[s.parents[k]] + rng.unit_vec3() * 0.2;
  }
  return s;
}

Pose random_pose(RngStream& rng, double max_angle_rad = 1.5) {
  Pose p = Pose::identity();
  p.root_translation = rng.normal_vec3() * 0.3;
  for (auto& q : p.rotations)
    q = Quat(Eigen::AngleAxisd(rng.uniform(-max_angle_rad, max_angle_rad),
                               rng.unit_vec3()));
  return p;
}

// Independent oracle: walks the ancestry of each joint separately and
// composes affines top-down, without reusing parent results.
Mat4 fk_oracle_joint(const Skeleton& s, const Pose& p, int joint) {
  std::vector<int> chain;
  for (int j = joint; j >= 0; j = s.parents[j]) chain.push_back(j);
  std::reverse(chain.begin(), chain.end());
  Mat4 acc = Mat4::Identity();
  acc.topRightCorner<3, 1>() = p.root_translation;
  for (int j : chain) {
    Mat4 local = Mat4::Identity();
    const Mat3 r = p.rotations[j].normalized().toRotationMatrix();
    local.topLeftCorner<3, 3>() = r;
    local.topRightCorner<3, 1>() = s.joints[j] - r * s.joints[j];
    acc = acc * local;
  }
  return acc;
}

}  // namespace

TEST_CASE("bone_transforms identity pose gives identity matrices") {
  RngStream rng(7);
  const Skeleton s = random_chain(rng);
  const BoneTransforms bt = bone_transforms(s, Pose::identity());
  for (const auto& t : bt.transforms)
    CHECK((t - Mat4::Identity()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("bone_transforms on a 2-joint chain, root rotated 90 deg about z") {
  const Skeleton s = two_joint_chain();
  Pose p = Pose::identity();
  p.rotations[0] = Quat(Eigen::AngleAxisd(EIGEN_PI / 2, Vec3::UnitZ()));
  const BoneTransforms bt = bone_transforms(s, p);
  // Child joint maps to its rest position rotated 90 degrees about the root.
  const Vec3 posed = bt.transforms[1].topLeftCorner<3, 3>() * s.joints[1] +
                     bt.transforms[1].topRightCorner<3, 1>();
  CHECK(posed.isApprox(Vec3(0, 1, 0), 1e-12));
}

TEST_CASE("bone_transforms matches independent FK oracle on random poses") {
  RngStream rng(11);
  double max_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Skeleton s = random_chain(rng);
    const Pose p = random_pose(rng);
    const BoneTransforms bt = bone_transforms(s, p);
    for (int k = 0; k < kJoints; ++k) {
      const Mat4 oracle = fk_oracle_joint(s, p, k);
      max_err = std::max(max_err, (bt.transforms[k] - oracle).cwiseAbs().maxCoeff());
    }
  }
  CHECK(max_err < 1e-9);
}

TEST_CASE("lbs_transform identity and one-hot cases") {
  RngStream rng(3);
  const Vec3 x = rng.normal_vec3();
  SkinWeights w;
  w.w.setConstant(1.0 / kJoints);
  CHECK(lbs_transform(x, w, BoneTransforms::identity()).isApprox(x, 1e-14));

  BoneTransforms bt = BoneTransforms::identity();
  const Vec3 t(0.3, -0.2, 0.5);
  bt.transforms[5].topRightCorner<3, 1>() = t;
  CHECK(lbs_transform(x, SkinWeights::one_hot(5), bt).isApprox(x + t, 1e-14));
}

TEST_CASE("lbs_transform blends translations linearly") {
  const Vec3 x(0.1, 0.2, 0.3);
  BoneTransforms bt = BoneTransforms::identity();
  const Vec3 t1(1, 0, 0), t2(0, 2, 0);
  bt.transforms[0].topRightCorner<3, 1>() = t1;
  bt.transforms[1].topRightCorner<3, 1>() = t2;
  SkinWeights w;
  w.w[0] = 0.5;
  w.w[1] = 0.5;
  CHECK(lbs_transform(x, w, bt).isApprox(x + 0.5 * (t1 + t2), 1e-14));
}

TEST_CASE("lbs_transform is affine in the point for convex combinations") {
  RngStream rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Skeleton s = random_chain(rng);
    const BoneTransforms bt = bone_transforms(s, random_pose(rng));
    Eigen::Matrix<double, kJoints, 1> raw;
    for (int k = 0; k < kJoints; ++k) raw[k] = rng.uniform();
    const SkinWeights w = SkinWeights::normalized(raw);
    const Vec3 x1 = rng.normal_vec3(), x2 = rng.normal_vec3();
    const double a = rng.uniform();
    const Vec3 lhs = lbs_transform(a * x1 + (1 - a) * x2, w, bt);
    const Vec3 rhs =
        a * lbs_transform(x1, w, bt) + (1 - a) * lbs_transform(x2, w, bt);
    CHECK((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("one-hot weights preserve distances under any pose") {
  RngStream rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Skeleton s = random_chain(rng);
    const BoneTransforms bt = bone_transforms(s, random_pose(rng));
    const int k = rng.uniform_int(kJoints);
    const Vec3 x1 = rng.normal_vec3(), x2 = rng.normal_vec3();
    const SkinWeights w = SkinWeights::one_hot(k);
    const double before = (x1 - x2).norm();
    const double after = (lbs_transform(x1, w, bt) - lbs_transform(x2, w, bt)).norm();
    CHECK(std::abs(after - before) <= 1e-6 * before);
  }
}

TEST_CASE("project: axis, pinhole formula, degenerate depth") {
  Camera c;
  c.fx = 500;
  c.fy = 500;
  c.cx = 360;
  c.cy = 540;
  c.width = 720;
  c.height = 1080;
  CHECK(project(Vec3(0, 0, 3.0), c)->isApprox(Vec2(360, 540), 1e-12));
  CHECK(project(Vec3(1, 0, 5), c)->isApprox(Vec2(460, 540), 1e-12));
  CHECK(!project(Vec3(0.2, 0.1, 0.0), c).has_value());
  CHECK(!project(Vec3(0.2, 0.1, -2.0), c).has_value());
}

TEST_CASE("canonical_to_view equals manual composition") {
  RngStream rng(31);
  const Skeleton s = random_chain(rng);
  const Pose p = random_pose(rng);
  Camera c = Camera::look_at(Vec3(0, 0, 5), Vec3::Zero(), 0.9, 640, 480);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = rng.normal_vec3() * 0.5;
    Eigen::Matrix<double, kJoints, 1> raw;
    for (int k = 0; k < kJoints; ++k) raw[k] = rng.uniform();
    const SkinWeights w = SkinWeights::normalized(raw);
    const auto via = canonical_to_view(x, w, s, p, c);
    const auto manual = project(lbs_transform(x, w, bone_transforms(s, p)), c);
    REQUIRE(via.has_value() == manual.has_value());
    if (via) CHECK(via->isApprox(*manual, 1e-12));
  }
}

TEST_CASE("positional encoding: origin, parity, quarter-wave") {
  const CanonicalBox box{Vec3::Zero(), 1.0};
  const auto at_origin = positional_encoding(Vec3::Zero(), box);
  for (int i = 0; i < kPosEncDim; i += 2) {
    CHECK(at_origin[i] == doctest::Approx(0.0));      // sin
    CHECK(at_origin[i + 1] == doctest::Approx(1.0));  // cos
  }

  RngStream rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 x = rng.normal_vec3() * 0.4;
    const auto pos = positional_encoding(x, box);
    const auto neg = positional_encoding(-x, box);
    for (int i = 0; i < kPosEncDim; i += 2) {
      CHECK(neg[i] == doctest::Approx(-pos[i]).epsilon(1e-12));
      CHECK(neg[i + 1] == doctest::Approx(pos[i + 1]).epsilon(1e-12));
    }
    CHECK(positional_encoding(x, box) == pos);  // deterministic
  }

  // c = 0.5 at frequency 1: sin entry 1, cos entry 0.
  const auto enc = positional_encoding(Vec3(0.5, 0, 0), box);
  CHECK(enc[0] == doctest::Approx(1.0));
  CHECK(enc[1] == doctest::Approx(0.0));

  reset_encoding_clamp_count();
  positional_encoding(Vec3(2.0, 0, 0), box);
  CHECK(encoding_clamp_count() == 1);
}

TEST_CASE("repose/unpose round trip") {
  RngStream rng(53);
  const Skeleton s = random_chain(rng);
  TriMesh m;
  for (int i = 0; i < 60; ++i) {
    m.vertices.push_back(rng.normal_vec3() * 0.5);
    Eigen::Matrix<double, kJoints, 1> raw;
    for (int k = 0; k < kJoints; ++k) raw[k] = rng.uniform();
    m.skin.push_back(SkinWeights::normalized(raw));
  }
  for (int i = 0; i + 2 < 60; i += 3) m.faces.push_back({i, i + 1, i + 2});
  const Pose p = random_pose(rng);
  const TriMesh back = unpose(repose(m, p, s), p, s);
  for (size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-10);
}

TEST_CASE("mesh io round trip: PLY exact for float32, OBJ close") {
  RngStream rng(61);
  TriMesh m;
  for (int i = 0; i < 40; ++i) m.vertices.push_back(rng.normal_vec3());
  for (int i = 0; i + 2 < 40; i += 3) m.faces.push_back({i, i + 1, i + 2});
  compute_vertex_normals(m);

  const auto dir = std::filesystem::temp_directory_path() / "ava_meshio";
  std::filesystem::create_directories(dir);

  save_ply(m, dir / "m.ply");
  const TriMesh ply = load_ply(dir / "m.ply");
  REQUIRE(ply.vertices.size() == m.vertices.size());
  REQUIRE(ply.faces == m.faces);
  for (size_t i = 0; i < m.vertices.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(ply.vertices[i][a] == double(float(m.vertices[i][a])));  // float32 exact

  // Second round trip is bit-stable.
  save_ply(ply, dir / "m2.ply");
  const TriMesh ply2 = load_ply(dir / "m2.ply");
  CHECK(ply2.vertices == ply.vertices);

  save_obj(m, dir / "m.obj");
  const TriMesh obj = load_obj(dir / "m.obj");
  REQUIRE(obj.faces == m.faces);
  for (size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((obj.vertices[i] - m.vertices[i]).norm() < 1e-7);
}

TEST_CASE("vertex grid index returns the true nearest with index tie-break") {
  RngStream rng(71);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(rng.normal_vec3());
  const VertexGridIndex index(pts);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 q = rng.normal_vec3() * 1.5;
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int i = 0; i < int(pts.size()); ++i) {
      const double d = (pts[size_t(i)] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    CHECK(index.nearest(q) == best);
  }

  // Exact tie: symmetric pair, lower index wins.
  std::vector<Vec3> sym = {Vec3(5, 5, 5), Vec3(9, 9, 9), Vec3(-1, 0, 0),
                           Vec3(2, 2, 2), Vec3(1, 0, 0)};
  const VertexGridIndex tie(sym);
  CHECK(tie.nearest(Vec3(0, 0, 0)) == 2);
}

TEST_CASE("bvh closest point matches brute force") {
  RngStream rng(83);
  TriMesh m;
  for (int i = 0; i < 90; ++i) m.vertices.push_back(rng.normal_vec3());
  for (int i = 0; i + 2 < 90; i += 3) m.faces.push_back({i, i + 1, i + 2});
  const TriangleBvh bvh(m);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 q = rng.normal_vec3() * 2.0;
    double best = std::numeric_limits<double>::max();
    for (const auto& f : m.faces)
      best = std::min(best, point_triangle_distance(q, m.vertices[f[0]],
                                                    m.vertices[f[1]],
                                                    m.vertices[f[2]]));
    CHECK(bvh.closest_point(q).distance == best);
  }
}

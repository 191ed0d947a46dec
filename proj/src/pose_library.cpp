#include "ava/pose_library.hpp"

#include "ava/bvh.hpp"
#include "ava/parallel.hpp"
#include "ava/rng.hpp"

namespace ava {

namespace {

constexpr double kDeg = EIGEN_PI / 180.0;

void rot(Pose& p, int joint, const Vec3& axis, double degrees) {
  p.rotations[size_t(joint)] =
      Quat(Eigen::AngleAxisd(degrees * kDeg, axis.normalized()));
}

// Joints indices (see body.cpp bone table): 7/8 shoulders, 10/11 elbows,
// 16/17 hips, 18/19 knees.
Pose archetype(int pose_id) {
  Pose p = Pose::identity();
  switch (pose_id) {
    case 0:  // strict T-pose
      break;
    case 1:  // A-pose: arms lowered ~40 degrees
      rot(p, 7, {0, 0, 1}, -40);
      rot(p, 8, {0, 0, 1}, 40);
      break;
    case 2: {  // sitting: thighs forward and slightly apart, shins down
      const Vec3 l_axis = Vec3(1, 0, -0.22).normalized();
      const Vec3 r_axis = Vec3(1, 0, 0.22).normalized();
      p.rotations[16] = Quat(Eigen::AngleAxisd(-48 * kDeg, l_axis));
      p.rotations[17] = Quat(Eigen::AngleAxisd(-48 * kDeg, r_axis));
      rot(p, 18, {1, 0, 0}, 62);
      rot(p, 19, {1, 0, 0}, 62);
      rot(p, 1, {1, 0, 0}, -8);  // lean back a touch
      rot(p, 7, {0, 0, 1}, -30);
      rot(p, 8, {0, 0, 1}, 30);
      break;
    }
    case 3:  // arms akimbo
      rot(p, 7, {0, 0, 1}, -35);
      rot(p, 8, {0, 0, 1}, 35);
      rot(p, 10, {0, 0, 1}, -52);
      rot(p, 11, {0, 0, 1}, 52);
      break;
    case 4:  // crossed arms: forward and inward, elbows bent
      rot(p, 7, {0, 1, 0}, -38);
      rot(p, 8, {0, 1, 0}, 38);
      rot(p, 10, {0, 1, 0}, -55);
      rot(p, 11, {0, 1, 0}, 55);
      break;
    case 5:  // walking, left leg forward
      rot(p, 16, {1, 0, 0}, -28);
      rot(p, 17, {1, 0, 0}, 18);
      rot(p, 19, {1, 0, 0}, 32);
      rot(p, 7, {0, 0, 1}, -62);
      rot(p, 8, {0, 0, 1}, 62);
      rot(p, 10, {1, 0, 0}, 18);
      rot(p, 11, {1, 0, 0}, -14);
      break;
    case 6:  // walking, right leg forward
      rot(p, 17, {1, 0, 0}, -28);
      rot(p, 16, {1, 0, 0}, 18);
      rot(p, 18, {1, 0, 0}, 32);
      rot(p, 7, {0, 0, 1}, -62);
      rot(p, 8, {0, 0, 1}, 62);
      rot(p, 11, {1, 0, 0}, 18);
      rot(p, 10, {1, 0, 0}, -14);
      break;
    default:
      throw Error("archetype: unknown fixed pose id");
  }
  return p;
}

Pose random_pose(RngStream& rng) {
  Pose p = Pose::identity();
  // Modest whole-body perturbation; bigger swings at shoulders and hips.
  for (int k = 1; k < kJoints; ++k) {
    double sigma = 10.0;
    if (k == 7 || k == 8 || k == 16 || k == 17) sigma = 28.0;
    if (k == 10 || k == 11 || k == 18 || k == 19) sigma = 22.0;
    const double angle = std::min(std::abs(rng.normal()) * sigma, 110.0);
    p.rotations[size_t(k)] = Quat(Eigen::AngleAxisd(angle * kDeg, rng.unit_vec3()));
  }
  return p;
}

}  // namespace

double self_intersection_fraction(const TriMesh& mesh) {
  const TriangleBvh bvh(mesh);
  const int n = int(mesh.faces.size());
  std::vector<uint8_t> bad(size_t(n), 0);
  par_for(n, [&](int64_t i) {
    const auto& fa = mesh.faces[size_t(i)];
    Aabb box;
    for (int v : fa) box.expand(mesh.vertices[size_t(v)]);
    std::vector<int> candidates;
    bvh.overlapping(box, &candidates);
    for (int j : candidates) {
      if (j == int(i)) continue;
      const auto& fb = mesh.faces[size_t(j)];
      bool adjacent = false;
      for (int va : fa)
        for (int vb : fb)
          if (va == vb) adjacent = true;
      if (adjacent) continue;
      if (triangles_intersect(mesh.vertices[size_t(fa[0])], mesh.vertices[size_t(fa[1])],
                              mesh.vertices[size_t(fa[2])], mesh.vertices[size_t(fb[0])],
                              mesh.vertices[size_t(fb[1])], mesh.vertices[size_t(fb[2])])) {
        bad[size_t(i)] = 1;  // each iteration writes only its own slot
        break;
      }
    }
  });
  int64_t count = 0;
  for (uint8_t b : bad) count += b;
  return double(count) / double(std::max(1, n));
}

Pose sample_pose(const Subject& subject, int pose_id, uint64_t seed) {
  if (pose_id < 0 || pose_id >= kPoseCount) throw Error("sample_pose: bad pose id");
  constexpr double kMaxBadFraction = 0.01;
  if (pose_id < 7) {
    const Pose p = archetype(pose_id);
    if (pose_id > 0) {
      const double frac = self_intersection_fraction(repose(subject.canonical, p,
                                                            subject.skeleton));
      if (frac > kMaxBadFraction)
        throw SelfIntersectingError("fixed pose " + std::to_string(pose_id) +
                                    " self-intersects on " + std::to_string(frac) +
                                    " of faces");
    }
    return p;
  }
  for (uint64_t attempt = 0;; ++attempt) {
    RngStream rng = derive_stream(seed, "pose",
                                  {subject.spec.seed, uint64_t(pose_id), attempt});
    const Pose p = random_pose(rng);
    const double frac =
        self_intersection_fraction(repose(subject.canonical, p, subject.skeleton));
    if (frac <= kMaxBadFraction) return p;
  }
}

Pose corrupt_pose(const Pose& pose, double noise_deg, uint64_t seed) {
  if (noise_deg < 0.0) throw Error("corrupt_pose: negative noise");
  if (noise_deg == 0.0) return pose;
  Pose out = pose;
  RngStream rng = derive_stream(seed, "pose-noise");
  for (auto& q : out.rotations) {
    const double angle = std::abs(rng.normal()) * noise_deg * kDeg;
    q = q * Quat(Eigen::AngleAxisd(angle, rng.unit_vec3()));
    q.normalize();
  }
  return out;
}

double rotation_distance(const Quat& a, const Quat& b) {
  const double dot = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return 2.0 * std::acos(dot);
}

}  // namespace ava

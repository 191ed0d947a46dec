#include "ava/skeleton.hpp"

namespace ava {

bool Skeleton::valid() const {
  int roots = 0;
  for (int k = 0; k < kJoints; ++k) {
    if (parents[k] < 0) {
      ++roots;
      if (k != 0) return false;
    } else if (parents[k] >= k) {
      return false;  // topological order
    }
  }
  return roots == 1;
}

Pose Pose::identity() {
  Pose p;
  p.rotations.fill(Quat::Identity());
  return p;
}

bool Pose::valid(double tol) const {
  for (const auto& q : rotations)
    if (std::abs(q.norm() - 1.0) > tol) return false;
  return true;
}

BoneTransforms BoneTransforms::identity() {
  BoneTransforms bt;
  bt.transforms.fill(Mat4::Identity());
  return bt;
}

bool BoneTransforms::valid(double tol) const {
  for (const auto& t : transforms) {
    const Mat3 r = t.topLeftCorner<3, 3>();
    if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(r.determinant() - 1.0) > tol) return false;
  }
  return true;
}

namespace {
// Affine rotation about a fixed point c.
Mat4 rotation_about(const Vec3& c, const Quat& q) {
  Mat4 t = Mat4::Identity();
  const Mat3 r = q.toRotationMatrix();
  t.topLeftCorner<3, 3>() = r;
  t.topRightCorner<3, 1>() = c - r * c;
  return t;
}
}  // namespace

BoneTransforms bone_transforms(const Skeleton& skeleton, const Pose& pose) {
  BoneTransforms bt;
  for (int k = 0; k < kJoints; ++k) {
    const Mat4 local = rotation_about(skeleton.joints[k], pose.rotations[k].normalized());
    if (skeleton.parents[k] < 0) {
      Mat4 t = local;
      t.topRightCorner<3, 1>() += pose.root_translation;
      bt.transforms[k] = t;
    } else {
      bt.transforms[k] = bt.transforms[skeleton.parents[k]] * local;
    }
  }
  return bt;
}

Mat4 blend_transforms(const SkinWeights& weights, const BoneTransforms& bt) {
  Mat4 m = Mat4::Zero();
  for (int k = 0; k < kJoints; ++k)
    if (weights.w[k] != 0.0) m += weights.w[k] * bt.transforms[k];
  return m;
}

Vec3 lbs_transform(const Vec3& point, const SkinWeights& weights,
                   const BoneTransforms& bt) {
  const Mat4 m = blend_transforms(weights, bt);
  return m.topLeftCorner<3, 3>() * point + m.topRightCorner<3, 1>();
}

TriMesh repose(const TriMesh& mesh, const Pose& pose, const Skeleton& skeleton) {
  if (!mesh.has_skin()) throw Error("repose: mesh carries no skin weights");
  const BoneTransforms bt = bone_transforms(skeleton, pose);
  TriMesh out = mesh;
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    out.vertices[i] = lbs_transform(mesh.vertices[i], mesh.skin[i], bt);
  compute_vertex_normals(out);
  return out;
}

TriMesh unpose(const TriMesh& mesh, const Pose& pose, const Skeleton& skeleton) {
  if (!mesh.has_skin()) throw Error("unpose: mesh carries no skin weights");
  const BoneTransforms bt = bone_transforms(skeleton, pose);
  TriMesh out = mesh;
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Mat4 m = blend_transforms(mesh.skin[i], bt);
    const Mat3 r = m.topLeftCorner<3, 3>();
    out.vertices[i] = r.partialPivLu().solve(mesh.vertices[i] - m.topRightCorner<3, 1>());
  }
  compute_vertex_normals(out);
  return out;
}

std::array<Vec3, kJoints> posed_joints(const Skeleton& skeleton, const Pose& pose) {
  const BoneTransforms bt = bone_transforms(skeleton, pose);
  std::array<Vec3, kJoints> out;
  for (int k = 0; k < kJoints; ++k) {
    const Mat4& t = bt.transforms[k];
    out[k] = t.topLeftCorner<3, 3>() * skeleton.joints[k] + t.topRightCorner<3, 1>();
  }
  return out;
}

}  // namespace ava

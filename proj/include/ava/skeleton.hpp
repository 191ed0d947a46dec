#pragma once

#include "ava/mesh.hpp"

namespace ava {

// K joints with rest positions and a parent hierarchy in topological order
// (parent index < child index, exactly one root at index 0).
struct Skeleton {
  std::array<Vec3, kJoints> joints;
  std::array<int, kJoints> parents;  // -1 for the root

  bool valid() const;
};

// Per-joint rotations relative to the rest pose plus a root translation.
struct Pose {
  std::array<Quat, kJoints> rotations;
  Vec3 root_translation = Vec3::Zero();

  static Pose identity();
  bool valid(double tol = 1e-6) const;
};

// One world affine per joint: the G_k that carries canonical-space points
// rigidly attached to joint k into the posed space.
struct BoneTransforms {
  std::array<Mat4, kJoints> transforms;

  static BoneTransforms identity();
  bool valid(double tol = 1e-5) const;  // rotation blocks orthonormal, det +1
};

// Composes each joint's chain of relative rotations about rest-pose joint
// positions into one world affine per joint. Identity pose -> K identities.
BoneTransforms bone_transforms(const Skeleton& skeleton, const Pose& pose);

// Blends the transform matrices first, then applies: (sum_k w_k T_k) * X.
Mat4 blend_transforms(const SkinWeights& weights, const BoneTransforms& bt);
Vec3 lbs_transform(const Vec3& point, const SkinWeights& weights,
                   const BoneTransforms& bt);

// Applies LBS per vertex; normals recomputed from faces.
TriMesh repose(const TriMesh& mesh, const Pose& pose, const Skeleton& skeleton);

// Inverse of the per-vertex blended transform; exact round trip with repose.
TriMesh unpose(const TriMesh& mesh, const Pose& pose, const Skeleton& skeleton);

// Posed joint positions (forward kinematics applied to rest joints).
std::array<Vec3, kJoints> posed_joints(const Skeleton& skeleton, const Pose& pose);

}  // namespace ava

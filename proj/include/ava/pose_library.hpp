#pragma once

#include "ava/body.hpp"

namespace ava {

constexpr int kPoseCount = 15;

// The fixed pose library: id 0 is the strict T-pose (identity), ids 1..6 are
// common poses (A-pose, sitting, arms akimbo, crossed arms, two walking),
// ids 7..14 are seeded random joint perturbations. Joint rotations stay
// below 120 degrees. Random poses are rejected and reseeded while the
// reposed subject self-intersects on more than 1% of faces; a fixed pose
// that does so raises SelfIntersectingError.
Pose sample_pose(const Subject& subject, int pose_id, uint64_t seed);

// Fraction of faces participating in a non-adjacent triangle intersection.
double self_intersection_fraction(const TriMesh& mesh);

// Perturbs each joint rotation by an isotropic random rotation with angle
// |N(0, noise_deg)| degrees; noise_deg = 0 returns the pose unchanged.
Pose corrupt_pose(const Pose& pose, double noise_deg, uint64_t seed);

// Geodesic angle (radians) between two rotations.
double rotation_distance(const Quat& a, const Quat& b);

}  // namespace ava

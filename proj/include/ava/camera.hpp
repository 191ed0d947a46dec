#pragma once

#include "ava/skeleton.hpp"

#include <optional>

namespace ava {

// Pinhole camera: intrinsics in pixels plus a rigid world-to-camera
// transform. Camera frame: +z forward (points in front have z > 0),
// image y down.
struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  Mat3 rot = Mat3::Identity();   // world -> camera rotation
  Vec3 trans = Vec3::Zero();     // x_cam = rot * x_world + trans
  int width = 0, height = 0;

  bool valid() const { return fx > 0 && fy > 0 && width > 0 && height > 0; }
  Vec3 to_camera(const Vec3& x) const { return rot * x + trans; }
  Vec3 position() const { return -rot.transpose() * trans; }

  // Look-at constructor: y-up world, image upright.
  static Camera look_at(const Vec3& eye, const Vec3& target, double fov_y_rad,
                        int width, int height);
};

// Pinhole projection u = fx*x/z + cx, v = fy*y/z + cy. Returns nullopt on
// degenerate depth (camera-frame z <= 1e-6): the point is behind or at the
// camera and the caller treats the view's feature as invisible.
std::optional<Vec2> project(const Vec3& point, const Camera& camera);

// project(lbs_transform(X, weights, bone_transforms(skeleton, pose)), camera).
// This is the projected location used for pixel-aligned feature retrieval.
std::optional<Vec2> canonical_to_view(const Vec3& X, const SkinWeights& weights,
                                      const Skeleton& skeleton, const Pose& pose,
                                      const Camera& camera);

}  // namespace ava

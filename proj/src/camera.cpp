#include "ava/camera.hpp"

namespace ava {

Camera Camera::look_at(const Vec3& eye, const Vec3& target, double fov_y_rad,
                       int width, int height) {
  Camera c;
  c.width = width;
  c.height = height;
  c.fy = 0.5 * height / std::tan(0.5 * fov_y_rad);
  c.fx = c.fy;
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;

  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitY());
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  right.normalize();
  const Vec3 down = forward.cross(right);
  c.rot.row(0) = right;
  c.rot.row(1) = down;
  c.rot.row(2) = forward;
  c.trans = -c.rot * eye;
  return c;
}

std::optional<Vec2> project(const Vec3& point, const Camera& camera) {
  const Vec3 pc = camera.to_camera(point);
  if (pc.z() <= 1e-6) return std::nullopt;
  return Vec2(camera.fx * pc.x() / pc.z() + camera.cx,
              camera.fy * pc.y() / pc.z() + camera.cy);
}

std::optional<Vec2> canonical_to_view(const Vec3& X, const SkinWeights& weights,
                                      const Skeleton& skeleton, const Pose& pose,
                                      const Camera& camera) {
  return project(lbs_transform(X, weights, bone_transforms(skeleton, pose)), camera);
}

}  // namespace ava

#include "ava/view.hpp"

#include "ava/rasterizer.hpp"
#include "ava/rng.hpp"

namespace ava {

std::shared_ptr<const PosedTemplate> PosedTemplate::make(const TemplateModel& tmpl,
                                                         const Pose& pose) {
  auto posed = std::make_shared<PosedTemplate>();
  const TriMesh reposed = repose(tmpl.mesh, pose, tmpl.skeleton);
  posed->vertices = reposed.vertices;
  posed->normals = reposed.normals;
  posed->index.build(posed->vertices);
  return posed;
}

uint64_t ViewSample::content_key() const {
  uint64_t h = fnv1a(image.data.data(), image.data.size() * sizeof(double));
  const double cam[6] = {camera.fx, camera.fy, camera.cx,
                         camera.cy, camera.trans.x(), camera.trans.y()};
  h = fnv1a(cam, sizeof cam, h);
  h = fnv1a(camera.rot.data(), 9 * sizeof(double), h);
  return h;
}

std::vector<ViewSample> render_views(const Subject& subject, const Pose& pose,
                                     int n_views, double distance_scale,
                                     uint64_t seed, const RenderOptions& opts) {
  if (n_views < 1) throw Error("render_views: need at least one view");
  if (distance_scale <= 0.0) throw Error("render_views: nonpositive distance scale");
  (void)seed;  // the camera ring is deterministic

  const TriMesh posed = repose(subject.canonical, pose, subject.skeleton);
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : posed.vertices) centroid += v;
  centroid /= double(posed.vertices.size());
  double radius = 0.0;
  for (const auto& v : posed.vertices) radius = std::max(radius, (v - centroid).norm());

  const int res = std::max(8, int(std::lround(opts.base_resolution * distance_scale)));
  const double fov = opts.fov_y_deg * EIGEN_PI / 180.0;
  const double dist =
      opts.camera_distance_factor * (1.15 * radius / std::tan(0.5 * fov) + 0.2);

  std::vector<ViewSample> views;
  views.reserve(size_t(n_views));
  for (int v = 0; v < n_views; ++v) {
    const double azimuth = 2.0 * EIGEN_PI * double(v) / double(n_views);
    const Vec3 eye = centroid + dist * Vec3(std::sin(azimuth), 0.0, std::cos(azimuth));
    const Camera cam = Camera::look_at(eye, centroid, fov, res, res);

    double z_near = std::numeric_limits<double>::max(), z_far = 0.0;
    for (const auto& p : posed.vertices) {
      const double z = cam.to_camera(p).z();
      z_near = std::min(z_near, z);
      z_far = std::max(z_far, z);
    }
    z_far = std::max(z_far, z_near + 1e-6);

    const RasterOutput raster = rasterize_perspective(posed, cam);
    ViewSample sample;
    sample.camera = cam;
    sample.pose = pose;
    sample.depth_near = z_near;
    sample.depth_far = z_far;
    sample.distance_scale = distance_scale;
    sample.image = Tensor({5, res, res});
    const int64_t plane = int64_t(res) * res;
    for (int64_t i = 0; i < plane; ++i) {
      if (!raster.mask[size_t(i)]) continue;
      sample.image.data[size_t(i)] = 1.0;
      sample.image.data[size_t(plane + i)] =
          std::clamp((raster.depth[size_t(i)] - z_near) / (z_far - z_near), 0.0, 1.0);
      for (int a = 0; a < 3; ++a)
        sample.image.data[size_t((2 + a) * plane + i)] = raster.normal[size_t(i)][a];
    }
    views.push_back(std::move(sample));
  }
  return views;
}

Vec3 visibility_normal(const Vec3& X, const SkinWeights& weights,
                       const Skeleton& skeleton, const ViewSample& view) {
  if (!view.posed_template)
    throw Error("visibility_normal: view carries no posed template");
  const Vec3 posed =
      lbs_transform(X, weights, bone_transforms(skeleton, view.pose));
  const int nearest = view.posed_template->index.nearest(posed);
  const Vec3 n_world = view.posed_template->normals[size_t(nearest)];
  const Vec3 n_cam = view.camera.rot * n_world;
  // Camera looks down +z; flip so the component toward the camera is positive.
  return Vec3(n_cam.x(), n_cam.y(), -n_cam.z());
}

void attach_template(std::vector<ViewSample>& views, const TemplateModel& tmpl) {
  // Posing the template is costly; share it across views with equal poses.
  std::vector<std::pair<Pose, std::shared_ptr<const PosedTemplate>>> cache;
  for (auto& view : views) {
    std::shared_ptr<const PosedTemplate> hit;
    for (const auto& [pose, posed] : cache) {
      bool same = (pose.root_translation - view.pose.root_translation).norm() == 0.0;
      for (int k = 0; same && k < kJoints; ++k)
        same = pose.rotations[size_t(k)].coeffs() == view.pose.rotations[size_t(k)].coeffs();
      if (same) {
        hit = posed;
        break;
      }
    }
    if (!hit) {
      hit = PosedTemplate::make(tmpl, view.pose);
      cache.emplace_back(view.pose, hit);
    }
    view.posed_template = hit;
  }
}

}  // namespace ava

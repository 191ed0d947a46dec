#pragma once

#include "ava/body.hpp"
#include "ava/camera.hpp"
#include "ava/tensor.hpp"

#include <memory>

namespace ava {

// The mean-shape template reposed with a view's fitted pose; carries the
// per-vertex unit normals that encode visibility.
struct PosedTemplate {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  VertexGridIndex index;

  static std::shared_ptr<const PosedTemplate> make(const TemplateModel& tmpl,
                                                   const Pose& pose);
};

// One input frame: a 5-channel geometry feature image (binary silhouette,
// normalized depth, world normal), the camera, the fitted pose, and the
// posed template for visibility tokens.
struct ViewSample {
  Tensor image;  // [5, H, W]: sil, depth in [0,1], nx, ny, nz
  Camera camera;
  Pose pose;
  double depth_near = 0.0, depth_far = 1.0;
  double distance_scale = 1.0;
  std::shared_ptr<const PosedTemplate> posed_template;

  int height() const { return image.shape[1]; }
  int width() const { return image.shape[2]; }
  // Deterministic content key; reconstruction orders views by it so outputs
  // are byte-identical under input permutation.
  uint64_t content_key() const;
};

struct RenderOptions {
  int base_resolution = 512;
  double fov_y_deg = 50.0;
  double camera_distance_factor = 1.0;  // >1 moves the ring outward
};

// n_views cameras on an equal-azimuth ring (360/n apart, elevation 0) aimed
// at the posed body centroid; image resolution is base * distance_scale,
// emulating capture distance by resolution. The fitted pose stored on each
// sample is `pose` itself; callers may corrupt it separately. The seed is
// folded into nothing yet (the ring is deterministic) but stays in the
// signature for reproducibility bookkeeping.
std::vector<ViewSample> render_views(const Subject& subject, const Pose& pose,
                                     int n_views, double distance_scale,
                                     uint64_t seed, const RenderOptions& opts = {});

// Camera-frame visibility normal at canonical point X for one view: the
// normal of the nearest posed-template vertex to the posed image of X,
// expressed so that z > 0 faces the camera and z < 0 faces away (invisible).
Vec3 visibility_normal(const Vec3& X, const SkinWeights& weights,
                       const Skeleton& skeleton, const ViewSample& view);

void attach_template(std::vector<ViewSample>& views, const TemplateModel& tmpl);

}  // namespace ava

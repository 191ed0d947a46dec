#include <doctest.h>

#include "ava/bvh.hpp"
#include "ava/dataset.hpp"
#include "ava/mesh_io.hpp"
#include "ava/metrics.hpp"
#include "ava/rng.hpp"

#include <filesystem>

using namespace ava;

namespace {

const Subject& cached_subject() {
  static const Subject subject = generate_subject(BodySpec::random(77, 0.02), 128);
  return subject;
}

}  // namespace

TEST_CASE("generate_subject: deterministic, simplex weights, landmark count") {
  const Subject a = generate_subject(BodySpec::random(42, 0.02), 96);
  const Subject b = generate_subject(BodySpec::random(42, 0.02), 96);
  REQUIRE(a.canonical.vertices.size() == b.canonical.vertices.size());
  CHECK(a.canonical.vertices == b.canonical.vertices);
  CHECK(a.canonical.faces == b.canonical.faces);
  for (size_t i = 0; i < a.canonical.skin.size(); ++i)
    CHECK(a.canonical.skin[i].w == b.canonical.skin[i].w);

  for (const auto& s : a.canonical.skin) CHECK(s.valid());
  CHECK(a.landmarks.size() == kLandmarkCount);
  CHECK(is_watertight(a.canonical));
}

TEST_CASE("generate_subject: zero bump stays on the analytic capsule surface") {
  BodySpec spec = BodySpec::random(7, 0.0);
  const Subject subject = generate_subject(spec, 128);
  const BodyField field(spec);
  double worst = 0.0;
  for (size_t i = 0; i < subject.canonical.vertices.size(); i += 7)
    worst = std::max(worst, std::abs(field.capsule_sdf(subject.canonical.vertices[i])));
  CHECK(worst < 1e-3);
}

TEST_CASE("generate_subject: landmarks lie on the surface") {
  const Subject& subject = cached_subject();
  const TriangleBvh bvh(subject.canonical);
  for (const auto& lm : subject.landmarks)
    CHECK(bvh.closest_point(lm.position).distance < 1e-3);
}

TEST_CASE("ground-truth weights are Lipschitz across mesh edges") {
  const Subject& subject = cached_subject();
  double worst = 0.0;
  for (const auto& f : subject.canonical.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      const double len =
          (subject.canonical.vertices[size_t(a)] - subject.canonical.vertices[size_t(b)]).norm();
      if (len < 1e-9) continue;
      const double l1 =
          (subject.canonical.skin[size_t(a)].w - subject.canonical.skin[size_t(b)].w)
              .cwiseAbs()
              .sum();
      worst = std::max(worst, l1 / len);
    }
  }
  CHECK(worst <= 30.0);
}

TEST_CASE("pose library: T-pose identity, determinism, bone length preservation") {
  const Subject& subject = cached_subject();
  const Pose t_pose = sample_pose(subject, 0, 5);
  for (const auto& q : t_pose.rotations)
    CHECK(q.angularDistance(Quat::Identity()) == doctest::Approx(0.0));

  for (int id = 0; id < kPoseCount; ++id) {
    const Pose p1 = sample_pose(subject, id, 5);
    const Pose p2 = sample_pose(subject, id, 5);
    for (int k = 0; k < kJoints; ++k)
      CHECK(p1.rotations[size_t(k)].coeffs() == p2.rotations[size_t(k)].coeffs());

    // FK length oracle: posed bone lengths match rest lengths.
    const auto posed = posed_joints(subject.skeleton, p1);
    for (int k = 1; k < kJoints; ++k) {
      const int parent = subject.skeleton.parents[size_t(k)];
      const double rest =
          (subject.skeleton.joints[size_t(k)] - subject.skeleton.joints[size_t(parent)]).norm();
      const double now = (posed[size_t(k)] - posed[size_t(parent)]).norm();
      CHECK(std::abs(now - rest) <= 1e-6 * std::max(1.0, rest));
    }

    // Rotation magnitudes stay under 120 degrees.
    for (const auto& q : p1.rotations)
      CHECK(q.angularDistance(Quat::Identity()) <= 120.0 * EIGEN_PI / 180.0 + 1e-9);
  }
}

TEST_CASE("pose round trip: repose then unpose recovers the canonical mesh") {
  const Subject& subject = cached_subject();
  const Pose pose = sample_pose(subject, 9, 5);
  const TriMesh back =
      unpose(repose(subject.canonical, pose, subject.skeleton), pose, subject.skeleton);
  double worst = 0.0;
  for (size_t i = 0; i < back.vertices.size(); ++i)
    worst = std::max(worst, (back.vertices[i] - subject.canonical.vertices[i]).norm());
  CHECK(worst < 1e-5);
}

TEST_CASE("corrupt_pose: identity at zero noise, deterministic, half-normal mean") {
  const Subject& subject = cached_subject();
  const Pose pose = sample_pose(subject, 1, 5);
  const Pose same = corrupt_pose(pose, 0.0, 123);
  for (int k = 0; k < kJoints; ++k)
    CHECK(same.rotations[size_t(k)].coeffs() == pose.rotations[size_t(k)].coeffs());

  const Pose n1 = corrupt_pose(pose, 5.0, 9);
  const Pose n2 = corrupt_pose(pose, 5.0, 9);
  for (int k = 0; k < kJoints; ++k)
    CHECK(n1.rotations[size_t(k)].coeffs() == n2.rotations[size_t(k)].coeffs());

  // Sample mean of the geodesic perturbation over many draws approaches
  // sqrt(2/pi) * sigma (half-normal mean).
  const double noise_deg = 5.0;
  double sum = 0.0;
  int count = 0;
  for (uint64_t trial = 0; trial < 420; ++trial) {
    const Pose noisy = corrupt_pose(pose, noise_deg, 1000 + trial);
    for (int k = 0; k < kJoints; ++k) {
      sum += rotation_distance(pose.rotations[size_t(k)], noisy.rotations[size_t(k)]);
      ++count;
    }
  }
  const double mean_deg = (sum / count) * 180.0 / EIGEN_PI;
  const double expected = std::sqrt(2.0 / EIGEN_PI) * noise_deg;
  CHECK(std::abs(mean_deg - expected) < 0.2 * expected);
}

TEST_CASE("render_views: azimuth ring, visible silhouette, depth vs ray oracle") {
  const Subject& subject = cached_subject();
  const Pose pose = sample_pose(subject, 1, 5);
  RenderOptions opts;
  opts.base_resolution = 128;
  const auto views = render_views(subject, pose, 8, 1.0, 3, opts);
  REQUIRE(views.size() == 8);

  // Cameras sit on the 45-degree ring around the vertical axis through the
  // body centroid.
  Vec3 ring_center = Vec3::Zero();
  for (const auto& view : views) ring_center += view.camera.position();
  ring_center /= 8.0;
  const Vec3 c0 = views[0].camera.position() - ring_center;
  for (int v = 0; v < 8; ++v) {
    const Vec3 cv = views[size_t(v)].camera.position() - ring_center;
    CHECK(cv.y() == doctest::Approx(c0.y()).epsilon(1e-9));
    const double angle = std::atan2(cv.x(), cv.z()) - std::atan2(c0.x(), c0.z());
    const double expected = 2.0 * EIGEN_PI * v / 8.0;
    const double diff = std::remainder(angle - expected, 2.0 * EIGEN_PI);
    CHECK(std::abs(diff) < 1e-6);
  }

  const TriMesh posed = repose(subject.canonical, pose, subject.skeleton);
  const TriangleBvh bvh(posed);
  for (const auto& view : views) {
    const int64_t plane = int64_t(view.width()) * view.height();
    double sil = 0.0;
    for (int64_t i = 0; i < plane; ++i) sil += view.image.data[size_t(i)];
    CHECK(sil > 0.0);

    // Binary silhouette, depth in [0,1] inside and 0 outside.
    for (int64_t i = 0; i < plane; ++i) {
      const double s = view.image.data[size_t(i)];
      CHECK((s == 0.0 || s == 1.0));
      const double d = view.image.data[size_t(plane + i)];
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
      if (s == 0.0) CHECK(d == 0.0);
    }
  }

  // Ray-cast oracle on 100 random covered pixels of view 2.
  const ViewSample& view = views[2];
  RngStream rng(31);
  const Mat3 rt = view.camera.rot.transpose();
  int checked = 0;
  while (checked < 100) {
    const int x = rng.uniform_int(view.width());
    const int y = rng.uniform_int(view.height());
    const int64_t plane = int64_t(view.width()) * view.height();
    const int64_t idx = int64_t(y) * view.width() + x;
    if (view.image.data[size_t(idx)] == 0.0) continue;
    const Vec3 dir_cam((x + 0.5 - view.camera.cx) / view.camera.fx,
                       (y + 0.5 - view.camera.cy) / view.camera.fy, 1.0);
    const Vec3 origin = view.camera.position();
    const Vec3 dir = (rt * dir_cam).normalized();
    TriangleBvh::RayHit hit;
    REQUIRE(bvh.ray_nearest(origin, dir, &hit));
    const double z_cam = view.camera.to_camera(origin + hit.t * dir).z();
    const double expected =
        std::clamp((z_cam - view.depth_near) / (view.depth_far - view.depth_near), 0.0, 1.0);
    CHECK(std::abs(view.image.data[size_t(plane + idx)] - expected) < 1e-3);
    ++checked;
  }
}

TEST_CASE("render_views: silhouette area shrinks with camera distance") {
  const Subject& subject = cached_subject();
  const Pose pose = Pose::identity();
  double prev = std::numeric_limits<double>::max();
  for (double factor : {1.0, 1.3, 1.7, 2.2}) {
    RenderOptions opts;
    opts.base_resolution = 96;
    opts.camera_distance_factor = factor;
    const auto views = render_views(subject, pose, 1, 1.0, 3, opts);
    double area = 0.0;
    const int64_t plane = int64_t(views[0].width()) * views[0].height();
    for (int64_t i = 0; i < plane; ++i) area += views[0].image.data[size_t(i)];
    CHECK(area <= prev);
    prev = area;
  }
}

TEST_CASE("visibility normal faces the camera on front vertices") {
  const Subject& subject = cached_subject();
  const TemplateModel tmpl = TemplateModel::build(96);
  const Pose pose = Pose::identity();
  RenderOptions opts;
  opts.base_resolution = 64;
  auto views = render_views(subject, pose, 2, 1.0, 1, opts);  // front, back
  attach_template(views, tmpl);

  // A template vertex on the chest, facing +z (toward the azimuth-0 camera).
  int front = -1;
  for (int i = 0; i < int(tmpl.mesh.vertices.size()); ++i) {
    const Vec3& v = tmpl.mesh.vertices[size_t(i)];
    if (std::abs(v.x()) < 0.05 && std::abs(v.y() - 1.2) < 0.1 &&
        tmpl.mesh.normals[size_t(i)].z() > 0.9) {
      front = i;
      break;
    }
  }
  REQUIRE(front >= 0);
  const Vec3 x = tmpl.mesh.vertices[size_t(front)];
  const SkinWeights w = tmpl.mesh.skin[size_t(front)];

  const Vec3 n_front = visibility_normal(x, w, tmpl.skeleton, views[0]);
  const Vec3 n_back = visibility_normal(x, w, tmpl.skeleton, views[1]);
  CHECK(n_front.z() > 0.0);   // faces azimuth-0 camera
  CHECK(n_back.z() < 0.0);    // invisible from the opposite side
  CHECK(n_front.norm() == doctest::Approx(1.0).epsilon(1e-6));

  // Brute-force nearest-vertex + frame-change oracle on random surface points.
  RngStream rng(17);
  const auto posed = PosedTemplate::make(tmpl, pose);
  for (int trial = 0; trial < 100; ++trial) {
    const int vi = rng.uniform_int(int(tmpl.mesh.vertices.size()));
    const Vec3 probe = tmpl.mesh.vertices[size_t(vi)] + rng.normal_vec3() * 0.01;
    const SkinWeights pw = tmpl.mesh.skin[size_t(vi)];
    const Vec3 got = visibility_normal(probe, pw, tmpl.skeleton, views[0]);

    const Vec3 moved = lbs_transform(probe, pw, bone_transforms(tmpl.skeleton, pose));
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int i = 0; i < int(posed->vertices.size()); ++i) {
      const double d = (posed->vertices[size_t(i)] - moved).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    Vec3 expect = views[0].camera.rot * posed->normals[size_t(best)];
    expect.z() = -expect.z();
    CHECK((got - expect).norm() < 1e-9);
  }
}

TEST_CASE("dataset: build, counts, determinism, reload") {
  const auto dir = std::filesystem::temp_directory_path() / "ava_dataset_test";
  std::filesystem::remove_all(dir);
  DatasetParams params;
  params.n_subjects = 2;
  params.n_poses = 3;
  params.n_views = 2;
  params.split_ratio = 0.5;
  params.seed = 11;
  params.base_resolution = 48;
  params.subject_mc_res = 80;
  params.template_mc_res = 80;
  params.pose_noise_deg = 2.0;
  const DatasetManifest manifest = build_manifest(dir, params);

  // Counting: per subject one pose.json per pose, n_views zips per pose.
  for (int s = 0; s < params.n_subjects; ++s)
    for (int p = 0; p < params.n_poses; ++p) {
      CHECK(std::filesystem::exists(manifest.pose_dir(s, p) / "pose.json"));
      for (int v = 0; v < params.n_views; ++v)
        CHECK(std::filesystem::exists(manifest.view_path(s, p, v)));
    }
  CHECK(manifest.train_ids.size() == 1);
  CHECK(manifest.test_ids.size() == 1);

  // Rerun is a no-op returning the identical manifest.
  const DatasetManifest again = build_manifest(dir, params);
  CHECK(again.to_json() == manifest.to_json());

  // Reload and inspect a view.
  const DatasetManifest loaded = load_manifest(dir / "manifest.json");
  CHECK(loaded.to_json() == manifest.to_json());
  const ViewSample view = load_view(loaded, 0, 1, 1);
  CHECK(view.width() == 48);
  double sil = 0.0;
  for (int64_t i = 0; i < 48 * 48; ++i) sil += view.image.data[size_t(i)];
  CHECK(sil > 0.0);

  const Subject subject = load_subject(loaded.subject_path(0));
  CHECK(subject.canonical.skin.size() == subject.canonical.vertices.size());
  CHECK(subject.landmarks.size() == kLandmarkCount);

  // Split ratio example: 0.75 of 8 -> 6 train / 2 test.
  std::vector<int> order(8);
  const int n_train = int(std::lround(0.75 * 8));
  CHECK(n_train == 6);
  std::filesystem::remove_all(dir);
}

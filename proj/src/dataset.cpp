#include "ava/dataset.hpp"

#include "ava/mesh_io.hpp"
#include "ava/rng.hpp"
#include "ava/zip.hpp"

#include <json.hpp>

#include <fstream>
#include <numeric>

namespace ava {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return text;
}

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(size_t(std::max(0, width - int(s.size()))), '0') + s;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from(const json& j) { return Vec3(j[0], j[1], j[2]); }

json params_json(const DatasetParams& p) {
  return json{{"n_subjects", p.n_subjects},
              {"n_poses", p.n_poses},
              {"n_views", p.n_views},
              {"split_ratio", p.split_ratio},
              {"seed", p.seed},
              {"base_resolution", p.base_resolution},
              {"distance_scale", p.distance_scale},
              {"bump_amplitude", p.bump_amplitude},
              {"pose_noise_deg", p.pose_noise_deg},
              {"subject_mc_res", p.subject_mc_res},
              {"template_mc_res", p.template_mc_res}};
}

DatasetParams params_from(const json& j) {
  DatasetParams p;
  p.n_subjects = j["n_subjects"];
  p.n_poses = j["n_poses"];
  p.n_views = j["n_views"];
  p.split_ratio = j["split_ratio"];
  p.seed = j["seed"];
  p.base_resolution = j["base_resolution"];
  p.distance_scale = j["distance_scale"];
  p.bump_amplitude = j["bump_amplitude"];
  p.pose_noise_deg = j["pose_noise_deg"];
  p.subject_mc_res = j["subject_mc_res"];
  p.template_mc_res = j["template_mc_res"];
  return p;
}

void save_landmarks(const std::vector<Landmark>& landmarks,
                    const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& lm : landmarks)
    arr.push_back({{"name", lm.name}, {"position", vec3_json(lm.position)}});
  write_text(path, json{{"schema", 1}, {"landmarks", arr}}.dump(2) + "\n");
}

std::vector<Landmark> load_landmarks(const std::filesystem::path& path) {
  const json j = json::parse(read_text(path));
  std::vector<Landmark> out;
  for (const auto& e : j["landmarks"])
    out.push_back({e["name"].get<std::string>(), vec3_from(e["position"])});
  return out;
}

void save_subject_dir(const Subject& subject, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_ply(subject.canonical, dir / "canonical.ply");
  save_skin_weights(subject.canonical.skin, dir / "skin_weights.f32");
  write_text(dir / "skeleton.json", skeleton_to_json(subject.skeleton));
  save_landmarks(subject.landmarks, dir / "landmarks.json");
  write_text(dir / "body_spec.json", subject.spec.to_json());
}

void save_view_zip(const ViewSample& view, const std::filesystem::path& path) {
  ZipWriter zip(path);
  const int h = view.height(), w = view.width();
  const json meta = {{"schema", 1},
                     {"width", w},
                     {"height", h},
                     {"channels", json::array({"sil", "depth", "nx", "ny", "nz"})},
                     {"depth_near", view.depth_near},
                     {"depth_far", view.depth_far},
                     {"distance_scale", view.distance_scale}};
  zip.add("meta.json", meta.dump(2));
  zip.add("camera.json", camera_to_json(view.camera));
  const int64_t plane = int64_t(h) * w;
  const char* names[5] = {"sil.f32", "depth.f32", "nx.f32", "ny.f32", "nz.f32"};
  for (int c = 0; c < 5; ++c) {
    std::vector<float> data(static_cast<size_t>(plane));
    for (int64_t i = 0; i < plane; ++i)
      data[size_t(i)] = float(view.image.data[size_t(c * plane + i)]);
    zip.add_f32(names[c], data);
  }
  zip.close();
}

}  // namespace

std::filesystem::path DatasetManifest::pose_dir(int s, int p) const {
  return subject_path(s) / ("pose_" + zero_pad(p, 2));
}

std::filesystem::path DatasetManifest::view_path(int s, int p, int v) const {
  return pose_dir(s, p) / ("view_" + zero_pad(v, 2) + ".zip");
}

std::string DatasetManifest::to_json() const {
  json j;
  j["schema"] = 1;
  j["params"] = params_json(params);
  j["box"] = {{"center", vec3_json(box.center)}, {"half_extent", box.half_extent}};
  json subjects = json::array();
  for (size_t i = 0; i < subject_dirs.size(); ++i) {
    json files = json::array();
    for (int p = 0; p < params.n_poses; ++p) {
      json views = json::array();
      for (int v = 0; v < params.n_views; ++v)
        views.push_back("pose_" + zero_pad(p, 2) + "/view_" + zero_pad(v, 2) + ".zip");
      files.push_back({{"pose", "pose_" + zero_pad(p, 2) + "/pose.json"},
                       {"views", views}});
    }
    subjects.push_back({{"dir", subject_dirs[i]},
                        {"seed", subject_seeds[i]},
                        {"poses", files}});
  }
  j["subjects"] = subjects;
  j["split"] = {{"train", train_ids}, {"test", test_ids}};
  j["template"] = "template";
  return j.dump(2) + "\n";
}

DatasetManifest build_manifest(const std::filesystem::path& out_dir,
                               const DatasetParams& params) {
  if (params.n_subjects < 1 || params.n_views < 1 || params.n_poses < 1 ||
      params.n_poses > kPoseCount)
    throw UsageError("build_manifest: bad counts");

  const auto manifest_path = out_dir / "manifest.json";
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.params = params;

  // Idempotent rerun: identical existing manifest means nothing to do.
  if (std::filesystem::exists(manifest_path)) {
    DatasetManifest existing = load_manifest(manifest_path);
    if (params_json(existing.params) == params_json(params)) return existing;
    throw IoError("manifest exists with different parameters: " +
                  manifest_path.string());
  }
  std::filesystem::create_directories(out_dir);

  // Template (mean shape, no bumps).
  const Subject template_subject =
      generate_subject(BodySpec::base(), params.template_mc_res);
  save_subject_dir(template_subject, out_dir / "template");

  // Subjects.
  std::vector<Subject> subjects;
  subjects.reserve(size_t(params.n_subjects));
  for (int s = 0; s < params.n_subjects; ++s) {
    const uint64_t subject_seed = derive_stream(params.seed, "subject", {uint64_t(s)}).next_u64();
    const BodySpec spec = BodySpec::random(subject_seed, params.bump_amplitude);
    subjects.push_back(generate_subject(spec, params.subject_mc_res));
    manifest.subject_dirs.push_back("subject_" + zero_pad(s, 3));
    manifest.subject_seeds.push_back(subject_seed);
  }

  // Canonical box over the whole dataset, centered between subjects.
  Aabb all;
  for (const auto& s : subjects) {
    const Aabb b = mesh_bounds(s.canonical);
    all.expand(b.lo);
    all.expand(b.hi);
  }
  manifest.box.center = all.center();
  double max_dev = 0.0;
  for (const auto& s : subjects)
    for (const auto& v : s.canonical.vertices)
      max_dev = std::max(max_dev, (v - manifest.box.center).cwiseAbs().maxCoeff());
  manifest.box.half_extent = 1.1 * max_dev;

  // Split: seeded shuffle, then round(ratio * n) train subjects.
  std::vector<int> order(size_t(params.n_subjects));
  std::iota(order.begin(), order.end(), 0);
  RngStream split_rng = derive_stream(params.seed, "split");
  for (int i = params.n_subjects - 1; i > 0; --i)
    std::swap(order[size_t(i)], order[size_t(split_rng.uniform_int(i + 1))]);
  const int n_train = int(std::lround(params.split_ratio * params.n_subjects));
  manifest.train_ids.assign(order.begin(), order.begin() + n_train);
  manifest.test_ids.assign(order.begin() + n_train, order.end());
  std::sort(manifest.train_ids.begin(), manifest.train_ids.end());
  std::sort(manifest.test_ids.begin(), manifest.test_ids.end());

  // Poses and views.
  for (int s = 0; s < params.n_subjects; ++s) {
    const Subject& subject = subjects[size_t(s)];
    save_subject_dir(subject, manifest.subject_path(s));
    for (int p = 0; p < params.n_poses; ++p) {
      const Pose true_pose =
          sample_pose(subject, p, derive_stream(params.seed, "pose-seed", {uint64_t(s)}).next_u64());
      Pose fitted = true_pose;
      if (params.pose_noise_deg > 0.0)
        fitted = corrupt_pose(
            true_pose, params.pose_noise_deg,
            derive_stream(params.seed, "pose-noise", {uint64_t(s), uint64_t(p)}).next_u64());
      std::filesystem::create_directories(manifest.pose_dir(s, p));
      write_text(manifest.pose_dir(s, p) / "pose.json",
                 pose_to_json(fitted, params.pose_noise_deg > 0.0 ? &true_pose : nullptr));
      RenderOptions opts;
      opts.base_resolution = params.base_resolution;
      auto views = render_views(subject, true_pose, params.n_views,
                                params.distance_scale,
                                derive_stream(params.seed, "render", {uint64_t(s), uint64_t(p)}).next_u64(),
                                opts);
      for (int v = 0; v < params.n_views; ++v) {
        views[size_t(v)].pose = fitted;  // the stored pose is the fitted one
        save_view_zip(views[size_t(v)], manifest.view_path(s, p, v));
      }
    }
  }

  write_text(manifest_path, manifest.to_json());
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_json) {
  const json j = json::parse(read_text(manifest_json));
  DatasetManifest m;
  m.root = manifest_json.parent_path();
  m.params = params_from(j["params"]);
  m.box.center = vec3_from(j["box"]["center"]);
  m.box.half_extent = j["box"]["half_extent"];
  for (const auto& s : j["subjects"]) {
    m.subject_dirs.push_back(s["dir"].get<std::string>());
    m.subject_seeds.push_back(s["seed"].get<uint64_t>());
  }
  m.train_ids = j["split"]["train"].get<std::vector<int>>();
  m.test_ids = j["split"]["test"].get<std::vector<int>>();

  // Referenced files must exist; splits must be disjoint.
  for (int t : m.train_ids)
    for (int e : m.test_ids)
      if (t == e) throw IoError("manifest: train/test splits overlap");
  for (size_t s = 0; s < m.subject_dirs.size(); ++s) {
    if (!std::filesystem::exists(m.subject_path(int(s)) / "canonical.ply"))
      throw IoError("manifest references missing subject: " + m.subject_dirs[s]);
    for (int p = 0; p < m.params.n_poses; ++p) {
      if (!std::filesystem::exists(m.pose_dir(int(s), p) / "pose.json"))
        throw IoError("manifest references missing pose file");
      for (int v = 0; v < m.params.n_views; ++v)
        if (!std::filesystem::exists(m.view_path(int(s), p, v)))
          throw IoError("manifest references missing view file");
    }
  }
  return m;
}

Subject load_subject(const std::filesystem::path& dir) {
  Subject s;
  s.canonical = load_ply(dir / "canonical.ply");
  s.canonical.skin = load_skin_weights(dir / "skin_weights.f32");
  if (s.canonical.skin.size() != s.canonical.vertices.size())
    throw IoError("skin weight count mismatch in " + dir.string());
  s.skeleton = skeleton_from_json(read_text(dir / "skeleton.json"));
  s.landmarks = load_landmarks(dir / "landmarks.json");
  s.spec = BodySpec::parse(read_text(dir / "body_spec.json"));
  return s;
}

TemplateModel load_template(const DatasetManifest& manifest) {
  return TemplateModel::from_subject(load_subject(manifest.root / "template"));
}

ViewSample load_view(const DatasetManifest& manifest, int subject, int pose, int view) {
  return load_view_file(manifest.view_path(subject, pose, view));
}

ViewSample load_view_file(const std::filesystem::path& zip_path) {
  const ZipReader zip(zip_path);
  const json meta = json::parse(zip.read_text("meta.json"));
  ViewSample out;
  const int h = meta["height"], w = meta["width"];
  out.depth_near = meta["depth_near"];
  out.depth_far = meta["depth_far"];
  out.distance_scale = meta["distance_scale"];
  out.camera = camera_from_json(zip.read_text("camera.json"));
  out.pose = pose_from_json(read_text(zip_path.parent_path() / "pose.json"));
  out.image = Tensor({5, h, w});
  const char* names[5] = {"sil.f32", "depth.f32", "nx.f32", "ny.f32", "nz.f32"};
  const int64_t plane = int64_t(h) * w;
  for (int c = 0; c < 5; ++c) {
    const auto data = zip.read_f32(names[c]);
    if (int64_t(data.size()) != plane) throw IoError("bad channel plane size");
    for (int64_t i = 0; i < plane; ++i)
      out.image.data[size_t(c * plane + i)] = double(data[size_t(i)]);
  }
  return out;
}

Pose true_pose_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("true_rotations_axis_angle")) return pose_from_json(text);
  Pose p = Pose::identity();
  const auto& arr = j["true_rotations_axis_angle"];
  if (arr.size() != kJoints) throw IoError("pose json: wrong rotation count");
  for (int k = 0; k < kJoints; ++k) {
    const Vec3 aa = vec3_from(arr[size_t(k)]);
    const double angle = aa.norm();
    p.rotations[size_t(k)] =
        angle < 1e-12 ? Quat::Identity() : Quat(Eigen::AngleAxisd(angle, aa / angle));
  }
  p.root_translation = vec3_from(j["true_root_translation"]);
  return p;
}

std::string pose_to_json(const Pose& pose, const Pose* true_pose) {
  auto encode = [](const Pose& p) {
    json arr = json::array();
    for (const auto& q : p.rotations) {
      const Eigen::AngleAxisd aa(q);
      arr.push_back(vec3_json(aa.axis() * aa.angle()));
    }
    return arr;
  };
  json j;
  j["schema"] = 1;
  j["rotations_axis_angle"] = encode(pose);
  j["root_translation"] = vec3_json(pose.root_translation);
  j["units"] = "m";
  if (true_pose) {
    j["true_rotations_axis_angle"] = encode(*true_pose);
    j["true_root_translation"] = vec3_json(true_pose->root_translation);
  }
  return j.dump(2) + "\n";
}

Pose pose_from_json(const std::string& text) {
  const json j = json::parse(text);
  Pose p = Pose::identity();
  const auto& arr = j["rotations_axis_angle"];
  if (arr.size() != kJoints) throw IoError("pose json: wrong rotation count");
  for (int k = 0; k < kJoints; ++k) {
    const Vec3 aa = vec3_from(arr[size_t(k)]);
    const double angle = aa.norm();
    p.rotations[size_t(k)] =
        angle < 1e-12 ? Quat::Identity()
                      : Quat(Eigen::AngleAxisd(angle, aa / angle));
  }
  p.root_translation = vec3_from(j["root_translation"]);
  return p;
}

std::string skeleton_to_json(const Skeleton& s) {
  json joints = json::array(), parents = json::array();
  for (int k = 0; k < kJoints; ++k) {
    joints.push_back(vec3_json(s.joints[size_t(k)]));
    parents.push_back(s.parents[size_t(k)]);
  }
  return json{{"schema", 1}, {"joints", joints}, {"parents", parents}, {"units", "m"}}
             .dump(2) +
         "\n";
}

Skeleton skeleton_from_json(const std::string& text) {
  const json j = json::parse(text);
  Skeleton s;
  if (j["joints"].size() != kJoints) throw IoError("skeleton json: wrong joint count");
  for (int k = 0; k < kJoints; ++k) {
    s.joints[size_t(k)] = vec3_from(j["joints"][size_t(k)]);
    s.parents[size_t(k)] = j["parents"][size_t(k)];
  }
  if (!s.valid()) throw IoError("skeleton json: invalid hierarchy");
  return s;
}

std::string camera_to_json(const Camera& c) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) rot.push_back(c.rot(r, col));
  return json{{"schema", 1},
              {"fx", c.fx},
              {"fy", c.fy},
              {"cx", c.cx},
              {"cy", c.cy},
              {"width", c.width},
              {"height", c.height},
              {"rot_row_major", rot},
              {"trans", vec3_json(c.trans)},
              {"units", "px (intrinsics), m (extrinsics)"}}
             .dump(2) +
         "\n";
}

Camera camera_from_json(const std::string& text) {
  const json j = json::parse(text);
  Camera c;
  c.fx = j["fx"];
  c.fy = j["fy"];
  c.cx = j["cx"];
  c.cy = j["cy"];
  c.width = j["width"];
  c.height = j["height"];
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) c.rot(r, col) = j["rot_row_major"][size_t(3 * r + col)];
  c.trans = vec3_from(j["trans"]);
  if (!c.valid()) throw IoError("camera json: invalid");
  return c;
}

}  // namespace ava

#pragma once

#include "ava/pose_library.hpp"
#include "ava/view.hpp"

#include <filesystem>

namespace ava {

struct DatasetParams {
  int n_subjects = 10;
  int n_poses = kPoseCount;
  int n_views = 8;
  double split_ratio = 0.8;
  uint64_t seed = 1;
  int base_resolution = 128;
  double distance_scale = 1.0;
  double bump_amplitude = 0.02;
  double pose_noise_deg = 0.0;  // error injected into the fitted poses
  int subject_mc_res = 160;
  int template_mc_res = 128;
};

struct DatasetManifest {
  std::filesystem::path root;
  DatasetParams params;
  CanonicalBox box;
  std::vector<std::string> subject_dirs;
  std::vector<uint64_t> subject_seeds;
  std::vector<int> train_ids, test_ids;

  std::filesystem::path subject_path(int s) const { return root / subject_dirs[size_t(s)]; }
  std::filesystem::path pose_dir(int s, int p) const;
  std::filesystem::path view_path(int s, int p, int v) const;
  std::string to_json() const;
};

// Writes the full on-disk dataset (template + subjects + manifest.json).
// Deterministic in params.seed; a rerun over an existing identical manifest
// is a no-op. Throws IoError on unwritable paths.
DatasetManifest build_manifest(const std::filesystem::path& out_dir,
                               const DatasetParams& params);

DatasetManifest load_manifest(const std::filesystem::path& manifest_json);

// Subject data reloaded from disk (mesh, weights, skeleton, landmarks, spec).
Subject load_subject(const std::filesystem::path& subject_dir);

TemplateModel load_template(const DatasetManifest& manifest);

// One frame, with the fitted pose and camera; the posed template must be
// attached before visibility queries (attach_template).
ViewSample load_view(const DatasetManifest& manifest, int subject, int pose, int view);

// Loads a view container directly from its path (pose.json is the sibling
// file in the same pose directory).
ViewSample load_view_file(const std::filesystem::path& zip_path);

// The stored ground-truth pose when present (pose noise was injected),
// otherwise the fitted pose itself.
Pose true_pose_from_json(const std::string& text);

// JSON helpers shared by the CLI (axis-angle pose convention at the
// boundary, quaternions inside).
std::string pose_to_json(const Pose& pose, const Pose* true_pose = nullptr);
Pose pose_from_json(const std::string& text);
std::string skeleton_to_json(const Skeleton& s);
Skeleton skeleton_from_json(const std::string& text);
std::string camera_to_json(const Camera& c);
Camera camera_from_json(const std::string& text);

}  // namespace ava

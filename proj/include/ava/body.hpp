#pragma once

#include "ava/grid_index.hpp"
#include "ava/marching_cubes.hpp"
#include "ava/skeleton.hpp"

namespace ava {

// Procedural articulated capsule-body specification. Bone k is the capsule
// from joint parent(k) to joint k (the root gets a sphere at the pelvis);
// lengths rebuild the rest skeleton along fixed directions.
struct BodySpec {
  uint64_t seed = 0;
  std::array<double, kJoints> limb_lengths{};  // meters, entry 0 unused
  std::array<double, kJoints> limb_radii{};    // meters
  double bump_amplitude = 0.02;                // [0, 0.05]

  static BodySpec base();                              // the mean-shape template
  static BodySpec random(uint64_t seed, double bump);  // +-10% symmetric variation

  bool valid() const;
  std::string to_json() const;
  static BodySpec parse(const std::string& json_text);
};

// Analytic ground-truth field owned by the generator: occupancy, surface
// distance, and skinning weights defined over all of space.
class BodyField {
 public:
  explicit BodyField(const BodySpec& spec);

  const Skeleton& skeleton() const { return skeleton_; }
  const BodySpec& spec() const { return spec_; }

  // Signed distance to the bare capsule union (negative inside).
  double capsule_sdf(const Vec3& x) const;
  double bump(const Vec3& x) const;
  // Occupancy-style field: 0.5 on the surface, larger inside.
  double occupancy_field(const Vec3& x) const { return 0.5 + bump(x) - capsule_sdf(x); }
  bool inside(const Vec3& x) const { return occupancy_field(x) > 0.5; }

  // Distance-softmax weights over the nearest 4 bones, sigma = 0.07 m.
  SkinWeights weights(const Vec3& x) const;

  // Distance from x to the axis element of bone k.
  double bone_distance(const Vec3& x, int k) const;

 private:
  BodySpec spec_;
  Skeleton skeleton_;
  struct Blob {
    Vec3 center;
    double sigma, amplitude;
  };
  std::vector<Blob> blobs_;
};

struct Landmark {
  std::string name;
  Vec3 position;
};

struct Subject {
  TriMesh canonical;  // with per-vertex ground-truth skin weights
  Skeleton skeleton;
  std::vector<Landmark> landmarks;  // exactly 62, on the surface
  BodySpec spec;
};

constexpr int kLandmarkCount = 62;

// Deterministic in spec.seed. Throws DegenerateBodyError if the capsule
// union is disconnected.
Subject generate_subject(const BodySpec& spec, int mc_res = 160);

// The mean-shape template standing in for a statistical body model:
// the base body with no bumps, plus a nearest-vertex index.
struct TemplateModel {
  TriMesh mesh;  // canonical pose, with skin weights
  Skeleton skeleton;
  std::vector<Landmark> landmarks;
  VertexGridIndex index;

  static TemplateModel build(int mc_res = 128);
  static TemplateModel from_subject(const Subject& s);
};

// Skinning weights of the nearest template vertex; exact nearest with
// lowest-index tie-break.
SkinWeights nn_skin(const Vec3& x, const TemplateModel& tmpl);

}  // namespace ava

#include "ava/body.hpp"

#include "ava/rng.hpp"

#include <json.hpp>

#include <queue>

namespace ava {

namespace {

struct BoneDef {
  const char* name;
  int parent;
  Vec3 dir;  // unit direction from parent, canonical T-pose, y up, z forward
  double length, radius;
};

// 24-joint body: torso chain, collars, arms along +-x, legs down, feet +z.
const std::array<BoneDef, kJoints>& bone_defs() {
  static const std::array<BoneDef, kJoints> defs = {{
      {"pelvis", -1, {0, 0, 0}, 0.0, 0.110},
      {"spine1", 0, {0, 1, 0}, 0.11, 0.120},
      {"spine2", 1, {0, 1, 0}, 0.11, 0.125},
      {"chest", 2, {0, 1, 0}, 0.11, 0.120},
      {"l_collar", 3, {0.707107, 0.707107, 0}, 0.11, 0.070},
      {"r_collar", 3, {-0.707107, 0.707107, 0}, 0.11, 0.070},
      {"neck", 3, {0, 1, 0}, 0.14, 0.055},
      {"l_shoulder", 4, {0.948683, 0.316228, 0}, 0.13, 0.062},
      {"r_shoulder", 5, {-0.948683, 0.316228, 0}, 0.13, 0.062},
      {"head", 6, {0, 1, 0}, 0.12, 0.095},
      {"l_elbow", 7, {1, 0, 0}, 0.28, 0.050},
      {"r_elbow", 8, {-1, 0, 0}, 0.28, 0.050},
      {"l_wrist", 10, {1, 0, 0}, 0.26, 0.042},
      {"r_wrist", 11, {-1, 0, 0}, 0.26, 0.042},
      {"l_hand", 12, {1, 0, 0}, 0.12, 0.040},
      {"r_hand", 13, {-1, 0, 0}, 0.12, 0.040},
      {"l_hip", 0, {0.957826, -0.287348, 0}, 0.120, 0.080},
      {"r_hip", 0, {-0.957826, -0.287348, 0}, 0.120, 0.080},
      {"l_knee", 16, {0, -1, 0}, 0.40, 0.072},
      {"r_knee", 17, {0, -1, 0}, 0.40, 0.072},
      {"l_ankle", 18, {0, -1, 0}, 0.38, 0.058},
      {"r_ankle", 19, {0, -1, 0}, 0.38, 0.058},
      {"l_foot", 20, {0, -0.447214, 0.894427}, 0.16, 0.045},
      {"r_foot", 21, {0, -0.447214, 0.894427}, 0.16, 0.045},
  }};
  return defs;
}

const Vec3 kRootPosition(0.0, 0.95, 0.0);

// Mirror partner for symmetric sampling (or self).
int mirror_of(int k) {
  static const int table[kJoints] = {0, 1,  2,  3,  5,  4,  6,  8,  7,  9,  11, 10,
                                     13, 12, 15, 14, 17, 16, 19, 18, 21, 20, 23, 22};
  return table[k];
}

Skeleton skeleton_from_lengths(const std::array<double, kJoints>& lengths) {
  Skeleton s;
  const auto& defs = bone_defs();
  s.parents[0] = -1;
  s.joints[0] = kRootPosition;
  for (int k = 1; k < kJoints; ++k) {
    s.parents[k] = defs[size_t(k)].parent;
    s.joints[k] =
        s.joints[defs[size_t(k)].parent] + defs[size_t(k)].dir * lengths[size_t(k)];
  }
  return s;
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

const char* joint_name(int k);
const char* joint_name(int k) { return bone_defs()[size_t(k)].name; }

BodySpec BodySpec::base() {
  BodySpec spec;
  spec.seed = 0;
  spec.bump_amplitude = 0.0;
  for (int k = 0; k < kJoints; ++k) {
    spec.limb_lengths[size_t(k)] = bone_defs()[size_t(k)].length;
    spec.limb_radii[size_t(k)] = bone_defs()[size_t(k)].radius;
  }
  return spec;
}

BodySpec BodySpec::random(uint64_t seed, double bump) {
  BodySpec spec = base();
  spec.seed = seed;
  spec.bump_amplitude = bump;
  RngStream rng = derive_stream(seed, "body-spec");
  for (int k = 0; k < kJoints; ++k) {
    if (mirror_of(k) < k) {  // copy from the mirrored side
      spec.limb_lengths[size_t(k)] = spec.limb_lengths[size_t(mirror_of(k))];
      spec.limb_radii[size_t(k)] = spec.limb_radii[size_t(mirror_of(k))];
      continue;
    }
    spec.limb_lengths[size_t(k)] *= rng.uniform(0.9, 1.1);
    spec.limb_radii[size_t(k)] *= rng.uniform(0.9, 1.1);
  }
  return spec;
}

bool BodySpec::valid() const {
  if (bump_amplitude < 0.0 || bump_amplitude > 0.05) return false;
  for (int k = 1; k < kJoints; ++k)
    if (!(limb_lengths[size_t(k)] > 0.0)) return false;
  for (int k = 0; k < kJoints; ++k)
    if (!(limb_radii[size_t(k)] > 0.0)) return false;
  return true;
}

std::string BodySpec::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["seed"] = seed;
  j["limb_lengths"] = limb_lengths;
  j["limb_radii"] = limb_radii;
  j["bump_amplitude"] = bump_amplitude;
  return j.dump(2) + "\n";
}

BodySpec BodySpec::parse(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BodySpec spec;
  spec.seed = j["seed"].get<uint64_t>();
  const auto ll = j["limb_lengths"].get<std::vector<double>>();
  const auto lr = j["limb_radii"].get<std::vector<double>>();
  if (ll.size() != kJoints || lr.size() != kJoints)
    throw IoError("body spec: wrong limb array size");
  std::copy(ll.begin(), ll.end(), spec.limb_lengths.begin());
  std::copy(lr.begin(), lr.end(), spec.limb_radii.begin());
  spec.bump_amplitude = j["bump_amplitude"].get<double>();
  return spec;
}

BodyField::BodyField(const BodySpec& spec)
    : spec_(spec), skeleton_(skeleton_from_lengths(spec.limb_lengths)) {
  if (!spec.valid()) throw Error("invalid BodySpec");
  if (spec.bump_amplitude > 0.0) {
    RngStream rng = derive_stream(spec.seed, "bumps");
    const int count = 24;
    blobs_.reserve(count);
    for (int i = 0; i < count; ++i) {
      const int bone = 1 + rng.uniform_int(kJoints - 1);
      const double t = rng.uniform();
      const Vec3 axis_point = skeleton_.joints[size_t(skeleton_.parents[size_t(bone)])] +
                              t * (skeleton_.joints[size_t(bone)] -
                                   skeleton_.joints[size_t(skeleton_.parents[size_t(bone)])]);
      const Vec3 dir = rng.unit_vec3();
      Blob blob;
      blob.center = axis_point + dir * (spec.limb_radii[size_t(bone)] + rng.uniform(-0.01, 0.02));
      blob.sigma = rng.uniform(0.06, 0.14);
      blob.amplitude = spec.bump_amplitude * rng.uniform(0.4, 1.0) *
                       (rng.uniform() < 0.5 ? -1.0 : 1.0);
      blobs_.push_back(blob);
    }
  }
}

double BodyField::bone_distance(const Vec3& x, int k) const {
  if (k == 0) return (x - skeleton_.joints[0]).norm();
  return segment_distance(x, skeleton_.joints[size_t(skeleton_.parents[size_t(k)])],
                          skeleton_.joints[size_t(k)]);
}

double BodyField::capsule_sdf(const Vec3& x) const {
  double d = std::numeric_limits<double>::max();
  for (int k = 0; k < kJoints; ++k)
    d = std::min(d, bone_distance(x, k) - spec_.limb_radii[size_t(k)]);
  return d;
}

double BodyField::bump(const Vec3& x) const {
  if (blobs_.empty()) return 0.0;
  double b = 0.0;
  for (const auto& blob : blobs_) {
    const double r2 = (x - blob.center).squaredNorm();
    b += blob.amplitude * std::exp(-r2 / (2.0 * blob.sigma * blob.sigma));
  }
  // Soft clamp so overlapping blobs never displace beyond the configured
  // amplitude (which must stay below the thinnest limb radius).
  const double a = spec_.bump_amplitude;
  return a * std::tanh(b / a);
}

SkinWeights BodyField::weights(const Vec3& x) const {
  // Distance softmax over every bone, measuring distance to each bone's
  // capsule surface. Truncating to the nearest few bones would jump wherever
  // the rank order swaps, and axis distances put steep two-way transitions on
  // the skin at limb creases; surface distances keep the field smooth (well
  // inside the Lipschitz budget) while staying effectively sparse at this
  // sigma.
  constexpr double kSigma = 0.07;
  double d_min = std::numeric_limits<double>::max();
  std::array<double, kJoints> dist;
  for (int k = 0; k < kJoints; ++k) {
    dist[size_t(k)] = std::max(0.0, bone_distance(x, k) - spec_.limb_radii[size_t(k)]);
    d_min = std::min(d_min, dist[size_t(k)]);
  }
  Eigen::Matrix<double, kJoints, 1> raw;
  for (int k = 0; k < kJoints; ++k) {
    const double d = dist[size_t(k)];
    raw[k] = std::exp(-(d * d - d_min * d_min) / (kSigma * kSigma));
  }
  return SkinWeights::normalized(raw);
}

namespace {

// Flood fill over an inside-voxel grid; the generated body must be a single
// connected component.
void require_connected(const BodyField& field, const CanonicalBox& box) {
  const int res = 48;
  std::vector<uint8_t> inside(size_t(res) * res * res, 0);
  const double step = box.side() / (res - 1);
  auto at = [&](int x, int y, int z) -> uint8_t& {
    return inside[(size_t(z) * res + size_t(y)) * res + size_t(x)];
  };
  int64_t total = 0;
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const Vec3 p = box.lo() + step * Vec3(x, y, z);
        if (field.inside(p)) {
          at(x, y, z) = 1;
          ++total;
        }
      }
  if (total == 0) throw DegenerateBodyError("body occupies no volume");
  // BFS from the first inside voxel.
  std::queue<std::array<int, 3>> queue;
  int64_t reached = 0;
  for (int z = 0; z < res && queue.empty(); ++z)
    for (int y = 0; y < res && queue.empty(); ++y)
      for (int x = 0; x < res && queue.empty(); ++x)
        if (at(x, y, z)) {
          queue.push({x, y, z});
          at(x, y, z) = 2;
          reached = 1;
        }
  const int dx[6] = {1, -1, 0, 0, 0, 0};
  const int dy[6] = {0, 0, 1, -1, 0, 0};
  const int dz[6] = {0, 0, 0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [x, y, z] = queue.front();
    queue.pop();
    for (int d = 0; d < 6; ++d) {
      const int nx = x + dx[d], ny = y + dy[d], nz = z + dz[d];
      if (nx < 0 || ny < 0 || nz < 0 || nx >= res || ny >= res || nz >= res) continue;
      if (at(nx, ny, nz) == 1) {
        at(nx, ny, nz) = 2;
        ++reached;
        queue.push({nx, ny, nz});
      }
    }
  }
  // Tolerate a whisker of stray voxels from bump noise, nothing more.
  if (double(reached) < 0.99 * double(total))
    throw DegenerateBodyError("capsule union is disconnected");
}

CanonicalBox generation_box(const Skeleton& skeleton, const BodySpec& spec) {
  Aabb box;
  for (int k = 0; k < kJoints; ++k) {
    const Vec3 pad = Vec3::Constant(spec.limb_radii[size_t(k)] + 0.08);
    box.expand(skeleton.joints[size_t(k)] + pad);
    box.expand(skeleton.joints[size_t(k)] - pad);
  }
  CanonicalBox out;
  out.center = box.center();
  out.half_extent = 0.5 * box.extent().maxCoeff();
  return out;
}

// 62 landmark definitions: every joint, six named body points, and a 4x4
// grid per hand, each pushed to the surface along a perpendicular ray.
struct LandmarkDef {
  std::string name;
  int bone;
  double t;
  Vec3 dir;
};

std::vector<LandmarkDef> landmark_defs() {
  std::vector<LandmarkDef> defs;
  const auto& bones = bone_defs();
  for (int k = 0; k < kJoints; ++k) {
    // Perpendicular-to-bone direction, forward when possible.
    Vec3 dir = Vec3(0, 0, 1);
    const Vec3 b = bones[size_t(k)].dir;
    if (std::abs(b.z()) > 0.7) dir = Vec3(0, -1, 0);
    defs.push_back({std::string("joint_") + bones[size_t(k)].name, k, 1.0, dir});
  }
  defs.push_back({"upper_chest", 3, 0.9, {0, 0, 1}});
  defs.push_back({"chest", 2, 0.5, {0, 0, 1}});
  defs.push_back({"l_upper_arm", 10, 0.5, {0, 0, 1}});
  defs.push_back({"r_upper_arm", 11, 0.5, {0, 0, 1}});
  defs.push_back({"l_toe", 22, 1.0, {0, -1, 0}});
  defs.push_back({"r_toe", 23, 1.0, {0, -1, 0}});
  const double ts[4] = {0.2, 0.45, 0.7, 0.95};
  const Vec3 dirs[4] = {{0, 0, 1}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}};
  for (int side = 0; side < 2; ++side) {
    const int bone = side == 0 ? 14 : 15;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        defs.push_back({std::string(side == 0 ? "l_hand_" : "r_hand_") +
                            std::to_string(i * 4 + j),
                        bone, ts[i], dirs[j]});
  }
  return defs;
}

Vec3 surface_point_along(const BodyField& field, const Vec3& origin, const Vec3& dir) {
  if (field.occupancy_field(origin) <= 0.5)
    throw DegenerateBodyError("landmark anchor fell outside the body");
  // origin lies inside; march outward to bracket the surface, then bisect.
  double lo = 0.0, hi = 0.0;
  for (double t = 0.02; t < 1.0; t += 0.02) {
    if (field.occupancy_field(origin + t * dir) <= 0.5) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi == 0.0) throw Error("landmark ray never left the body");
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (field.occupancy_field(origin + mid * dir) > 0.5)
      lo = mid;
    else
      hi = mid;
  }
  return origin + 0.5 * (lo + hi) * dir;
}

std::vector<Landmark> place_landmarks(const BodyField& field) {
  std::vector<Landmark> out;
  const Skeleton& s = field.skeleton();
  for (const auto& def : landmark_defs()) {
    const Vec3 a = def.bone == 0 ? s.joints[0]
                                 : s.joints[size_t(s.parents[size_t(def.bone)])];
    const Vec3 b = s.joints[size_t(def.bone)];
    const Vec3 origin = a + def.t * (b - a);
    out.push_back({def.name, surface_point_along(field, origin, def.dir)});
  }
  return out;
}

}  // namespace

Subject generate_subject(const BodySpec& spec, int mc_res) {
  const BodyField field(spec);
  const CanonicalBox box = generation_box(field.skeleton(), spec);
  require_connected(field, box);

  Subject subject;
  subject.spec = spec;
  subject.skeleton = field.skeleton();
  subject.canonical = marching_cubes_field(
      [&](const Vec3& p) { return field.occupancy_field(p); }, box, mc_res, 0.5, 14);
  subject.canonical.skin.reserve(subject.canonical.vertices.size());
  for (const auto& v : subject.canonical.vertices)
    subject.canonical.skin.push_back(field.weights(v));
  subject.landmarks = place_landmarks(field);
  return subject;
}

TemplateModel TemplateModel::build(int mc_res) {
  return from_subject(generate_subject(BodySpec::base(), mc_res));
}

TemplateModel TemplateModel::from_subject(const Subject& s) {
  TemplateModel tmpl;
  tmpl.mesh = s.canonical;
  tmpl.skeleton = s.skeleton;
  tmpl.landmarks = s.landmarks;
  tmpl.index.build(tmpl.mesh.vertices);
  return tmpl;
}

SkinWeights nn_skin(const Vec3& x, const TemplateModel& tmpl) {
  const int nearest = tmpl.index.nearest(x);
  if (nearest < 0) throw Error("nn_skin: empty template");
  return tmpl.mesh.skin[size_t(nearest)];
}

}  // namespace ava

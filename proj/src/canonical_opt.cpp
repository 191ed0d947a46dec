#include "ava/canonical_opt.hpp"

#include "ava/bvh.hpp"
#include "ava/rng.hpp"

namespace ava {

namespace {

struct Params {
  std::vector<Vec3> offsets;                             // per vertex
  std::vector<Eigen::Matrix<double, kJoints, 1>> logits; // per vertex

  Params scaled_step(const Params& grad, double eta) const {
    Params out = *this;
    for (size_t i = 0; i < offsets.size(); ++i) {
      out.offsets[i] -= eta * grad.offsets[i];
      out.logits[i] -= eta * grad.logits[i];
    }
    return out;
  }
};

struct State {
  const TriMesh* base = nullptr;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::vector<int>> neighbors;
  std::vector<SurfaceSample> canon_samples;              // frozen barycentric samples
  std::vector<std::vector<SurfaceSample>> scan_samples;  // frozen per scan
  std::vector<TriangleBvh> scan_bvh;
  std::vector<BoneTransforms> scan_bts;
  std::vector<int> landmark_anchor;  // nearest base vertex per landmark slot
};

std::vector<SkinWeights> weights_of(const Params& p) {
  std::vector<SkinWeights> w(p.logits.size());
  for (size_t i = 0; i < p.logits.size(); ++i) {
    const auto& l = p.logits[i];
    const double mx = l.maxCoeff();
    Eigen::Matrix<double, kJoints, 1> e = (l.array() - mx).exp();
    w[i].w = e / e.sum();
  }
  return w;
}

std::vector<Vec3> reposed_vertices(const State& st, const Params& p,
                                   const std::vector<SkinWeights>& w, int scan) {
  std::vector<Vec3> out(st.base->vertices.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = lbs_transform(st.base->vertices[i] + p.offsets[i], w[i],
                           st.scan_bts[size_t(scan)]);
  return out;
}

// Objective pieces. The chamfer term is the mean squared sample distance in
// both directions; the reported chamfer curve uses plain mean distance.
struct Objective {
  double total = 0.0;
  double chamfer_mean_m = 0.0;
};

Objective evaluate(const State& st, const Params& p, const CanonicalOptOptions& opts,
                   const std::vector<Scan>& scans) {
  const auto w = weights_of(p);
  Objective obj;
  double plain_sum = 0.0;
  int64_t plain_count = 0;
  for (size_t s = 0; s < scans.size(); ++s) {
    const auto verts = reposed_vertices(st, p, w, int(s));
    TriMesh reposed;
    reposed.vertices = verts;
    reposed.faces = st.faces;
    const TriangleBvh reposed_bvh(reposed);

    double sq = 0.0;
    for (const auto& sample : st.canon_samples) {
      const auto& f = st.faces[size_t(sample.face)];
      const Vec3 pos = sample.barycentric[0] * verts[size_t(f[0])] +
                       sample.barycentric[1] * verts[size_t(f[1])] +
                       sample.barycentric[2] * verts[size_t(f[2])];
      const double d = st.scan_bvh[s].closest_point(pos).distance;
      sq += d * d;
      plain_sum += d;
    }
    for (const auto& sample : st.scan_samples[s]) {
      const double d = reposed_bvh.closest_point(sample.position).distance;
      sq += d * d;
      plain_sum += d;
    }
    plain_count += int64_t(st.canon_samples.size() + st.scan_samples[s].size());
    obj.total += sq / double(st.canon_samples.size() + st.scan_samples[s].size());

    double lm = 0.0;
    for (size_t l = 0; l < st.landmark_anchor.size(); ++l) {
      const int vi = st.landmark_anchor[l];
      const Vec3 pos = lbs_transform(st.base->vertices[size_t(vi)] + p.offsets[size_t(vi)],
                                     w[size_t(vi)], st.scan_bts[s]);
      lm += (pos - scans[s].landmarks[l].position).squaredNorm();
    }
    obj.total += opts.lambda_landmark * lm / double(st.landmark_anchor.size());
  }
  obj.total /= double(scans.size());
  obj.chamfer_mean_m = plain_sum / double(plain_count);

  // Laplacian smoothness of offsets and weights.
  double reg = 0.0;
  for (size_t i = 0; i < st.neighbors.size(); ++i) {
    if (st.neighbors[i].empty()) continue;
    Vec3 om = Vec3::Zero();
    Eigen::Matrix<double, kJoints, 1> wm = Eigen::Matrix<double, kJoints, 1>::Zero();
    for (int j : st.neighbors[i]) {
      om += p.offsets[size_t(j)];
      wm += w[size_t(j)].w;
    }
    const double inv = 1.0 / double(st.neighbors[i].size());
    reg += (p.offsets[i] - om * inv).squaredNorm();
    reg += (w[i].w - wm * inv).squaredNorm();
  }
  obj.total += opts.lambda_reg * reg / double(st.neighbors.size());
  return obj;
}

// Analytic gradient with correspondences frozen at the current state.
Params gradient(const State& st, const Params& p, const CanonicalOptOptions& opts,
                const std::vector<Scan>& scans) {
  const auto w = weights_of(p);
  const size_t nv = st.base->vertices.size();
  std::vector<Vec3> d_off(nv, Vec3::Zero());
  std::vector<Eigen::Matrix<double, kJoints, 1>> d_w(
      nv, Eigen::Matrix<double, kJoints, 1>::Zero());

  // Accumulates d(obj)/d(reposed vertex) through LBS into offsets/weights.
  auto chain_vertex = [&](size_t vi, int scan, const Vec3& d_pos, double coef) {
    const Vec3 x = st.base->vertices[vi] + p.offsets[vi];
    const BoneTransforms& bt = st.scan_bts[size_t(scan)];
    const Mat4 blended = blend_transforms(w[vi], bt);
    d_off[vi] += coef * blended.topLeftCorner<3, 3>().transpose() * d_pos;
    for (int k = 0; k < kJoints; ++k) {
      if (w[vi].w[k] < 1e-12) continue;
      const Vec3 gk = bt.transforms[size_t(k)].topLeftCorner<3, 3>() * x +
                      bt.transforms[size_t(k)].topRightCorner<3, 1>();
      d_w[vi][k] += coef * d_pos.dot(gk);
    }
  };

  for (size_t s = 0; s < scans.size(); ++s) {
    const auto verts = reposed_vertices(st, p, w, int(s));
    TriMesh reposed;
    reposed.vertices = verts;
    reposed.faces = st.faces;
    const TriangleBvh reposed_bvh(reposed);
    const double inv_n =
        1.0 / double(st.canon_samples.size() + st.scan_samples[s].size());
    const double pose_coef = 1.0 / double(scans.size());

    for (const auto& sample : st.canon_samples) {
      const auto& f = st.faces[size_t(sample.face)];
      const Vec3 pos = sample.barycentric[0] * verts[size_t(f[0])] +
                       sample.barycentric[1] * verts[size_t(f[1])] +
                       sample.barycentric[2] * verts[size_t(f[2])];
      const auto hit = st.scan_bvh[s].closest_point(pos);
      const Vec3 d_pos = 2.0 * (pos - hit.point);
      for (int j = 0; j < 3; ++j)
        chain_vertex(size_t(f[j]), int(s), d_pos * sample.barycentric[j],
                     pose_coef * inv_n);
    }
    for (const auto& sample : st.scan_samples[s]) {
      const auto hit = reposed_bvh.closest_point(sample.position);
      const auto& f = st.faces[size_t(hit.face)];
      // Barycentric coordinates of the closest point on the hit face.
      const Vec3 &a = verts[size_t(f[0])], &b = verts[size_t(f[1])],
                 &c = verts[size_t(f[2])];
      const Vec3 v0 = b - a, v1 = c - a, v2 = hit.point - a;
      const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
      const double d20 = v2.dot(v0), d21 = v2.dot(v1);
      const double denom = std::max(1e-18, d00 * d11 - d01 * d01);
      const double bv = (d11 * d20 - d01 * d21) / denom;
      const double bw = (d00 * d21 - d01 * d20) / denom;
      const Vec3 bary(std::clamp(1.0 - bv - bw, 0.0, 1.0), std::clamp(bv, 0.0, 1.0),
                      std::clamp(bw, 0.0, 1.0));
      const Vec3 d_pos = 2.0 * (hit.point - sample.position);
      for (int j = 0; j < 3; ++j)
        chain_vertex(size_t(f[j]), int(s), d_pos * bary[j], pose_coef * inv_n);
    }
    const double lm_coef =
        opts.lambda_landmark / (double(st.landmark_anchor.size()) * double(scans.size()));
    for (size_t l = 0; l < st.landmark_anchor.size(); ++l) {
      const int vi = st.landmark_anchor[l];
      const Vec3 pos = lbs_transform(st.base->vertices[size_t(vi)] + p.offsets[size_t(vi)],
                                     w[size_t(vi)], st.scan_bts[s]);
      chain_vertex(size_t(vi), int(s), 2.0 * (pos - scans[s].landmarks[l].position),
                   lm_coef);
    }
  }

  // Laplacian terms.
  const double reg_coef = opts.lambda_reg / double(st.neighbors.size());
  std::vector<Vec3> r_off(nv, Vec3::Zero());
  std::vector<Eigen::Matrix<double, kJoints, 1>> r_w(
      nv, Eigen::Matrix<double, kJoints, 1>::Zero());
  for (size_t i = 0; i < nv; ++i) {
    if (st.neighbors[i].empty()) continue;
    Vec3 om = Vec3::Zero();
    Eigen::Matrix<double, kJoints, 1> wm = Eigen::Matrix<double, kJoints, 1>::Zero();
    for (int j : st.neighbors[i]) {
      om += p.offsets[size_t(j)];
      wm += w[size_t(j)].w;
    }
    const double inv = 1.0 / double(st.neighbors[i].size());
    r_off[i] = p.offsets[i] - om * inv;
    r_w[i] = w[i].w - wm * inv;
  }
  for (size_t i = 0; i < nv; ++i) {
    d_off[i] += 2.0 * reg_coef * r_off[i];
    d_w[i] += 2.0 * reg_coef * r_w[i];
    const double inv = st.neighbors[i].empty()
                           ? 0.0
                           : 1.0 / double(st.neighbors[i].size());
    for (int j : st.neighbors[i]) {
      // i contributes to neighbor j's residual mean. Uniform mesh graph is
      // symmetric, so use j's own valence.
      const double invj = 1.0 / double(st.neighbors[size_t(j)].size());
      d_off[i] -= 2.0 * reg_coef * invj * r_off[size_t(j)];
      d_w[i] -= 2.0 * reg_coef * invj * r_w[size_t(j)];
    }
    (void)inv;
  }

  // Softmax chain: d(loss)/d(logit).
  Params grad;
  grad.offsets = std::move(d_off);
  grad.logits.resize(nv);
  for (size_t i = 0; i < nv; ++i) {
    const double dot = w[i].w.dot(d_w[i]);
    grad.logits[i] = w[i].w.cwiseProduct(d_w[i] - Eigen::Matrix<double, kJoints, 1>::Constant(dot));
  }
  return grad;
}

}  // namespace

TriMesh cleanup_scan(const TriMesh& scan) { return scan; }

CanonicalOptResult optimize_canonical_skinning(const std::vector<Scan>& scans,
                                               const TemplateModel& init, int iters,
                                               const CanonicalOptOptions& opts) {
  if (scans.size() < 2)
    throw Error("optimize_canonical_skinning: need at least two scans");
  if (!init.mesh.has_skin())
    throw Error("optimize_canonical_skinning: template carries no weights");

  State st;
  st.base = &init.mesh;
  st.faces = init.mesh.faces;
  st.neighbors.resize(init.mesh.vertices.size());
  for (const auto& f : st.faces)
    for (int e = 0; e < 3; ++e) {
      st.neighbors[size_t(f[e])].push_back(f[(e + 1) % 3]);
      st.neighbors[size_t(f[e])].push_back(f[(e + 2) % 3]);
    }
  for (auto& n : st.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  st.canon_samples = sample_surface(init.mesh, opts.chamfer_samples, opts.sample_seed);
  for (const auto& scan : scans) {
    st.scan_samples.push_back(
        sample_surface(scan.mesh, opts.chamfer_samples, opts.sample_seed + 1));
    st.scan_bvh.emplace_back(scan.mesh);
    st.scan_bts.push_back(bone_transforms(init.skeleton, scan.pose));
  }
  for (const auto& lm : init.landmarks) {
    // Landmark slots correspond by order across template and scans.
    st.landmark_anchor.push_back(init.index.nearest(lm.position));
  }
  for (const auto& scan : scans)
    if (scan.landmarks.size() != st.landmark_anchor.size())
      throw Error("optimize_canonical_skinning: landmark correspondence mismatch");

  Params params;
  params.offsets.assign(init.mesh.vertices.size(), Vec3::Zero());
  params.logits.resize(init.mesh.vertices.size());
  for (size_t i = 0; i < init.mesh.vertices.size(); ++i)
    params.logits[i] = (init.mesh.skin[i].w.array().max(1e-8)).log().matrix();

  CanonicalOptResult result;
  Objective current = evaluate(st, params, opts, scans);
  result.objective_curve.push_back(current.total);
  result.chamfer_curve.push_back(current.chamfer_mean_m);

  double eta = opts.initial_step;
  double best_chamfer = current.chamfer_mean_m;
  int stall = 0;
  for (int it = 0; it < iters; ++it) {
    const Params grad = gradient(st, params, opts, scans);
    bool accepted = false;
    for (int halving = 0; halving < 24; ++halving) {
      const Params trial = params.scaled_step(grad, eta);
      const Objective trial_obj = evaluate(st, trial, opts, scans);
      if (trial_obj.total <= current.total) {
        params = trial;
        current = trial_obj;
        eta = std::min(eta * 1.4, 4.0);
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    result.objective_curve.push_back(current.total);
    result.chamfer_curve.push_back(current.chamfer_mean_m);
    ++result.iterations;

    if (current.chamfer_mean_m < best_chamfer - 1e-9) {
      best_chamfer = current.chamfer_mean_m;
      stall = 0;
    } else {
      ++stall;
    }
    if (!accepted || stall >= opts.stall_limit) {
      if (current.chamfer_mean_m < opts.converged_chamfer_m) break;  // converged
      throw NonConvergentError(
          "chamfer stalled at " + std::to_string(current.chamfer_mean_m) +
          " m after " + std::to_string(it + 1) + " iterations");
    }
  }

  result.canonical = init.mesh;
  const auto w = weights_of(params);
  for (size_t i = 0; i < result.canonical.vertices.size(); ++i) {
    result.canonical.vertices[i] += params.offsets[i];
    result.canonical.skin[i] = w[i];
  }
  compute_vertex_normals(result.canonical);
  return result;
}

}  // namespace ava

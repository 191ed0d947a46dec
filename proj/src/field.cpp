#include "ava/field.hpp"

#include "ava/encoding.hpp"

#include <algorithm>

namespace ava {

namespace {
constexpr int kFusionLayers = 2;
constexpr int kFusionHeads = 4;
}  // namespace

Networks::Networks(const PipelineConfig& cfg) : config(cfg) {
  srnet.prefix = "srnet.";
  srnet.dims = {cfg.srnet_input_dim(), 1024, 512, 256, 128, 1};
}

void Networks::init(ParamStore& store, uint64_t seed) const {
  {
    RngStream rng = derive_stream(seed, "init-encoder");
    encoder.init(store, rng);
  }
  if (config.use_sknet) {
    RngStream rng = derive_stream(seed, "init-sknet");
    sknet.init(store, rng);
  }
  {
    RngStream rng = derive_stream(seed, "init-srnet");
    srnet.init(store, rng);
  }
  if (config.use_fusion) {
    RngStream rng = derive_stream(seed, "init-fusion");
    init_param(store, "fusion.embed.w", {kTokenDim, kFeatureDim}, rng);
    init_param_zero(store, "fusion.embed.b", {kFeatureDim});
    for (int l = 0; l < kFusionLayers; ++l) {
      const std::string base = "fusion.l" + std::to_string(l) + ".";
      // Small output projections keep the residual stream near its input at
      // the start of training.
      for (const char* n : {"wq", "wk", "wv"})
        init_param(store, base + n, {kFeatureDim, kFeatureDim}, rng, 0.5);
      init_param(store, base + "wo", {kFeatureDim, kFeatureDim}, rng, 0.2);
      for (const char* n : {"bq", "bk", "bv", "bo"})
        init_param_zero(store, base + n, {kFeatureDim});
    }
    init_param(store, "fusion.out.w", {kFeatureDim, kFeatureDim}, rng);
    init_param_zero(store, "fusion.out.b", {kFeatureDim});
    init_param(store, "fusion.invalid", {1, kFeatureDim}, rng, 0.25);
  }
}

void Networks::init_srnet_from_sknet(ParamStore& store) const {
  for (int l = 1; l <= 3; ++l) {
    store.values[srnet.weight_name(l)] = store.at(sknet.weight_name(l));
    store.values[srnet.bias_name(l)] = store.at(sknet.bias_name(l));
  }
}

std::vector<std::string> Networks::fusion_param_names() const {
  std::vector<std::string> names = {"fusion.embed.w", "fusion.embed.b",
                                    "fusion.out.w", "fusion.out.b",
                                    "fusion.invalid"};
  for (int l = 0; l < kFusionLayers; ++l)
    for (const char* n : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"})
      names.push_back("fusion.l" + std::to_string(l) + "." + n);
  return names;
}

EvalContext EvalContext::make(std::vector<ViewSample> views, const TemplateModel& tmpl,
                              const Skeleton& skeleton, const CanonicalBox& box) {
  if (views.empty()) throw EmptyInputError("EvalContext: no views");
  EvalContext ctx;
  // Canonical view order: any permutation of the inputs produces the same
  // context, making every downstream reduction permutation-invariant.
  std::sort(views.begin(), views.end(), [](const ViewSample& a, const ViewSample& b) {
    return a.content_key() < b.content_key();
  });
  ctx.views = std::move(views);
  ctx.tmpl = &tmpl;
  ctx.skeleton = skeleton;
  ctx.box = box;
  for (const auto& v : ctx.views)
    ctx.bone_transforms_per_view.push_back(bone_transforms(skeleton, v.pose));
  return ctx;
}

namespace {

struct Projection {
  std::vector<Vec2> grid_coords;  // feature-grid units per view
  std::vector<uint8_t> valid;
};

// Projects each point into one view with the given per-point weights.
Projection project_points(const EvalContext& ctx, int view,
                          const std::vector<Vec3>& points,
                          const std::vector<SkinWeights>& weights, int stride) {
  const ViewSample& vs = ctx.views[size_t(view)];
  Projection out;
  out.grid_coords.resize(points.size(), Vec2::Zero());
  out.valid.resize(points.size(), 0);
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3 posed = lbs_transform(points[i], weights[i],
                                     ctx.bone_transforms_per_view[size_t(view)]);
    const auto px = project(posed, vs.camera);
    if (!px || px->x() < 0.0 || px->y() < 0.0 || px->x() >= double(vs.width()) ||
        px->y() >= double(vs.height()))
      continue;
    out.valid[i] = 1;
    out.grid_coords[i] =
        Vec2(px->x() / stride - 0.5, px->y() / stride - 0.5);
  }
  return out;
}

Tensor encoding_rows(const std::vector<Vec3>& points, const CanonicalBox& box) {
  Tensor enc({int(points.size()), kPosEncDim});
  for (size_t i = 0; i < points.size(); ++i) {
    const auto row = positional_encoding(points[i], box);
    std::copy(row.begin(), row.end(), enc.data.begin() + int64_t(i) * kPosEncDim);
  }
  return enc;
}

Tensor weight_rows(const std::vector<SkinWeights>& weights) {
  Tensor rows({int(weights.size()), kJoints});
  for (size_t i = 0; i < weights.size(); ++i)
    for (int k = 0; k < kJoints; ++k) rows.at2(int(i), k) = weights[i].w[k];
  return rows;
}

// Mean of per-view samples in canonical (sorted) view order.
Var average_views(Graph& g, const std::vector<Var>& feats) {
  Var sum = feats[0];
  for (size_t v = 1; v < feats.size(); ++v) sum = add(sum, feats[size_t(v)]);
  return scale(sum, 1.0 / double(feats.size()));
}

Var fusion_graph(Graph& g, ParamStore& store, Var tokens, int group) {
  Var x = add_rowvec(matmul(tokens, param(g, store, "fusion.embed.w")),
                     param(g, store, "fusion.embed.b"));
  for (int l = 0; l < kFusionLayers; ++l) {
    const std::string base = "fusion.l" + std::to_string(l) + ".";
    x = mha(x, param(g, store, base + "wq"), param(g, store, base + "bq"),
            param(g, store, base + "wk"), param(g, store, base + "bk"),
            param(g, store, base + "wv"), param(g, store, base + "bv"),
            param(g, store, base + "wo"), param(g, store, base + "bo"), group,
            kFusionHeads);
  }
  Var pooled = mean_groups(x, group);
  return add_rowvec(matmul(pooled, param(g, store, "fusion.out.w")),
                    param(g, store, "fusion.out.b"));
}

}  // namespace

SknetBatch sknet_graph(Graph& g, ParamStore& store, const Networks& nets,
                       const EvalContext& ctx, const std::vector<Vec3>& points,
                       const std::vector<Var>& maps) {
  const int n = int(points.size());
  const int v_count = ctx.view_count();
  SknetBatch batch;
  batch.nn_weights.reserve(size_t(n));
  for (const auto& p : points) batch.nn_weights.push_back(nn_skin(p, *ctx.tmpl));

  std::vector<Var> feats;
  std::vector<int> valid_count(size_t(n), 0);
  for (int v = 0; v < v_count; ++v) {
    const Projection proj =
        project_points(ctx, v, points, batch.nn_weights, Encoder::kStride);
    for (int i = 0; i < n; ++i) valid_count[size_t(i)] += proj.valid[size_t(i)];
    feats.push_back(bilinear_sample(maps[size_t(v)], proj.grid_coords, proj.valid));
  }
  batch.no_visible_view.resize(size_t(n), 0);
  for (int i = 0; i < n; ++i)
    batch.no_visible_view[size_t(i)] = valid_count[size_t(i)] == 0;

  const Var avg = average_views(g, feats);
  const Var enc = leaf(g, encoding_rows(points, ctx.box));
  const Var logits = nets.sknet.forward(g, store, concat_cols({avg, enc}));
  batch.softmax25 = softmax_rows(logits);
  const Var first24 = slice_cols(batch.softmax25, 0, kJoints);
  batch.skin24 = div_by_rowscalar(first24, row_sum(first24));
  batch.outside = slice_cols(batch.softmax25, kJoints, kJoints + 1);
  return batch;
}

SrnetBatch srnet_graph(Graph& g, ParamStore& store, const Networks& nets,
                       const EvalContext& ctx, const std::vector<Vec3>& points,
                       const std::vector<Var>& maps) {
  const int n = int(points.size());
  const int v_count = ctx.view_count();
  const PipelineConfig& cfg = nets.config;
  SrnetBatch out;

  // Skinning weights for projection: learned field (detached values, falling
  // back to nearest-neighbor where no view sees the point) or NN-Skin.
  Var spatial;  // differentiable spatial feature when enabled
  if (cfg.use_sknet) {
    out.sknet = sknet_graph(g, store, nets, ctx, points, maps);
    const Tensor& w = out.sknet.skin24.val();
    out.proj_weights.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
      if (out.sknet.no_visible_view[size_t(i)]) {
        out.proj_weights[size_t(i)] = out.sknet.nn_weights[size_t(i)];
      } else {
        Eigen::Matrix<double, kJoints, 1> raw;
        for (int k = 0; k < kJoints; ++k) raw[k] = w.at2(i, k);
        out.proj_weights[size_t(i)] = SkinWeights::normalized(raw.cwiseMax(0.0));
      }
    }
    if (cfg.use_spatial)
      spatial = replace_rows_with_constants(out.sknet.skin24,
                                            weight_rows(out.proj_weights),
                                            out.sknet.no_visible_view);
  } else {
    out.proj_weights.reserve(size_t(n));
    for (const auto& p : points) out.proj_weights.push_back(nn_skin(p, *ctx.tmpl));
    if (cfg.use_spatial) spatial = leaf(g, weight_rows(out.proj_weights));
  }

  // Pixel-aligned features per view with the chosen weights.
  std::vector<Var> feats;
  std::vector<std::vector<uint8_t>> oob(static_cast<size_t>(v_count));
  for (int v = 0; v < v_count; ++v) {
    const Projection proj =
        project_points(ctx, v, points, out.proj_weights, Encoder::kStride);
    auto& mask = oob[size_t(v)];
    mask.resize(size_t(n));
    for (int i = 0; i < n; ++i) mask[size_t(i)] = !proj.valid[size_t(i)];
    feats.push_back(bilinear_sample(maps[size_t(v)], proj.grid_coords, proj.valid));
  }

  Var fused;
  if (cfg.use_fusion) {
    // Tokens: [n*v, feature] with invalid rows carrying the learned
    // embedding, concatenated with the camera-frame visibility normal.
    std::vector<uint8_t> flat_oob(size_t(n) * size_t(v_count));
    Tensor normals({n * v_count, 3});
    for (int v = 0; v < v_count; ++v) {
      for (int i = 0; i < n; ++i) {
        flat_oob[size_t(i * v_count + v)] = oob[size_t(v)][size_t(i)];
        const Vec3 nv = visibility_normal(points[size_t(i)], out.proj_weights[size_t(i)],
                                          ctx.skeleton, ctx.views[size_t(v)]);
        for (int a = 0; a < 3; ++a) normals.at2(i * v_count + v, a) = nv[a];
      }
    }
    Var stacked = stack_groups(feats);
    stacked = replace_masked_rows(stacked, param(g, store, "fusion.invalid"), flat_oob);
    const Var tokens = concat_cols({stacked, leaf(g, std::move(normals))});
    fused = fusion_graph(g, store, tokens, v_count);
  } else {
    fused = average_views(g, feats);
  }

  std::vector<Var> inputs = {fused};
  if (cfg.use_spatial) inputs.push_back(spatial);
  inputs.push_back(leaf(g, encoding_rows(points, ctx.box)));
  const Var logits = nets.srnet.forward(g, store, concat_cols(inputs));
  out.occupancy = sigmoid(logits);
  return out;
}

Eigen::Matrix<double, kFeatureDim, 1> fuse_features(
    const std::vector<Eigen::Matrix<double, kTokenDim, 1>>& tokens,
    const std::vector<uint8_t>& out_of_bounds, ParamStore& store,
    const Networks& nets) {
  if (tokens.empty()) throw EmptyInputError("fuse_features: no tokens");
  if (int(tokens.size()) > nets.config.max_views)
    throw Error("fuse_features: more tokens than configured max views");
  if (out_of_bounds.size() != tokens.size())
    throw ShapeMismatchError("fuse_features: mask size");

  // Canonical token order: sort lexicographically (flag first) so any
  // permutation of the inputs yields bit-identical output.
  const int v = int(tokens.size());
  std::vector<int> order(static_cast<size_t>(v));
  for (int i = 0; i < v; ++i) order[size_t(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (out_of_bounds[size_t(a)] != out_of_bounds[size_t(b)])
      return out_of_bounds[size_t(a)] < out_of_bounds[size_t(b)];
    return std::lexicographical_compare(
        tokens[size_t(a)].data(), tokens[size_t(a)].data() + kTokenDim,
        tokens[size_t(b)].data(), tokens[size_t(b)].data() + kTokenDim);
  });

  Tensor rows({v, kTokenDim});
  std::vector<uint8_t> mask(static_cast<size_t>(v));
  for (int i = 0; i < v; ++i) {
    mask[size_t(i)] = out_of_bounds[size_t(order[size_t(i)])];
    for (int c = 0; c < kTokenDim; ++c)
      rows.at2(i, c) = tokens[size_t(order[size_t(i)])][c];
  }

  Graph g;
  Var x = leaf(g, std::move(rows));
  // The learned invalid embedding replaces the feature part of flagged rows.
  Var feature_part = slice_cols(x, 0, kFeatureDim);
  feature_part = replace_masked_rows(feature_part, param(g, store, "fusion.invalid"), mask);
  Var tokens_var = concat_cols({feature_part, slice_cols(x, kFeatureDim, kTokenDim)});
  const Var fused = fusion_graph(g, store, tokens_var, v);

  Eigen::Matrix<double, kFeatureDim, 1> out;
  for (int c = 0; c < kFeatureDim; ++c) out[c] = fused.val().at2(0, c);
  return out;
}

FieldEvaluator::FieldEvaluator(EvalContext ctx, ParamStore& store, const Networks& nets)
    : ctx_(std::move(ctx)), store_(store), nets_(nets) {
  for (const auto& view : ctx_.views)
    maps_.push_back(nets_.encoder.encode(store_, view.image).data);
}

SknetResult FieldEvaluator::sknet_forward(const Vec3& X) const {
  Graph g;
  std::vector<Var> maps;
  for (const auto& m : maps_) maps.push_back(leaf(g, m));
  const SknetBatch batch =
      sknet_graph(g, store_, nets_, ctx_, {X}, maps);
  if (batch.no_visible_view[0])
    throw NoVisibleViewError("sknet_forward: point projects into no view");
  SknetResult r;
  for (int k = 0; k < kJoints; ++k) r.weights.w[k] = batch.skin24.val().at2(0, k);
  r.outside_prob = batch.outside.val().at2(0, 0);
  return r;
}

double FieldEvaluator::srnet_forward(const Vec3& X) const {
  std::vector<double> out;
  eval_occupancy({X}, &out);
  return out[0];
}

void FieldEvaluator::eval_occupancy(const std::vector<Vec3>& points,
                                    std::vector<double>* out) const {
  out->assign(points.size(), 0.0);
  constexpr size_t kChunk = 4096;
  for (size_t begin = 0; begin < points.size(); begin += kChunk) {
    const size_t end = std::min(points.size(), begin + kChunk);
    Graph g;
    std::vector<Var> maps;
    for (const auto& m : maps_) maps.push_back(leaf(g, m));
    const std::vector<Vec3> chunk(points.begin() + int64_t(begin),
                                  points.begin() + int64_t(end));
    const SrnetBatch batch = srnet_graph(g, store_, nets_, ctx_, chunk, maps);
    for (size_t i = begin; i < end; ++i)
      (*out)[i] = batch.occupancy.val().at2(int(i - begin), 0);
  }
}

void FieldEvaluator::eval_skin(const std::vector<Vec3>& points,
                               std::vector<SkinWeights>* weights,
                               std::vector<double>* outside) const {
  weights->assign(points.size(), SkinWeights{});
  if (outside) outside->assign(points.size(), 0.0);
  constexpr size_t kChunk = 8192;
  for (size_t begin = 0; begin < points.size(); begin += kChunk) {
    const size_t end = std::min(points.size(), begin + kChunk);
    Graph g;
    std::vector<Var> maps;
    for (const auto& m : maps_) maps.push_back(leaf(g, m));
    const std::vector<Vec3> chunk(points.begin() + int64_t(begin),
                                  points.begin() + int64_t(end));
    const SknetBatch batch = sknet_graph(g, store_, nets_, ctx_, chunk, maps);
    for (size_t i = begin; i < end; ++i) {
      const int row = int(i - begin);
      if (batch.no_visible_view[size_t(row)]) {
        (*weights)[i] = batch.nn_weights[size_t(row)];
        if (outside) (*outside)[i] = batch.outside.val().at2(row, 0);
        continue;
      }
      for (int k = 0; k < kJoints; ++k)
        (*weights)[i].w[k] = batch.skin24.val().at2(row, k);
      if (outside) (*outside)[i] = batch.outside.val().at2(row, 0);
    }
  }
}

}  // namespace ava

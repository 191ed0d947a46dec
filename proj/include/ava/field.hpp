#pragma once

#include "ava/encoder.hpp"
#include "ava/mlp.hpp"
#include "ava/view.hpp"

namespace ava {

// Ablation switches. All on = the full pipeline; each off reproduces one
// baseline row (learned-skinning projection -> nearest-neighbor projection,
// spatial feature dropped, attention fusion -> plain feature average).
struct PipelineConfig {
  bool use_sknet = true;
  bool use_spatial = true;
  bool use_fusion = true;
  int max_views = 8;

  int srnet_input_dim() const {
    return kFeatureDim + (use_spatial ? kJoints : 0) + kPosEncDim;
  }
};

constexpr int kSknetInputDim = kFeatureDim + kPosEncDim;  // 280
constexpr int kSknetOutputDim = kJoints + 1;              // 24 weights + outside

// All trainable modules and their parameter names.
struct Networks {
  Encoder encoder;
  Mlp sknet{"sknet.", {kSknetInputDim, 1024, 512, 256, 128, kSknetOutputDim}};
  Mlp srnet;  // input dim depends on config
  PipelineConfig config;

  explicit Networks(const PipelineConfig& cfg = {});

  void init(ParamStore& store, uint64_t seed) const;
  // Copies the shape-compatible hidden layers (fc1..fc3) of a trained SKNet
  // into SRNet; input and output layers stay freshly initialized.
  void init_srnet_from_sknet(ParamStore& store) const;

  std::vector<std::string> fusion_param_names() const;
  std::vector<std::string> sknet_param_names() const { return sknet.param_names(); }
  std::vector<std::string> srnet_param_names() const { return srnet.param_names(); }
};

// One evaluation/training sample: the views (canonically ordered so every
// downstream reduction is permutation-invariant bit-for-bit), the fitted
// skeleton, the template for bootstrap skinning, and the canonical box.
struct EvalContext {
  std::vector<ViewSample> views;
  std::vector<BoneTransforms> bone_transforms_per_view;
  const TemplateModel* tmpl = nullptr;
  Skeleton skeleton;
  CanonicalBox box;

  static EvalContext make(std::vector<ViewSample> views, const TemplateModel& tmpl,
                          const Skeleton& skeleton, const CanonicalBox& box);
  int view_count() const { return int(views.size()); }
};

// Intermediate handles on the tape for a batch of points.
struct SknetBatch {
  Var softmax25;     // [N, 25]
  Var skin24;        // [N, 24] renormalized onto the simplex
  Var outside;       // [N, 1]
  std::vector<uint8_t> no_visible_view;  // per point: every view invalid
  std::vector<SkinWeights> nn_weights;   // bootstrap weights used to project
};

struct SrnetBatch {
  Var occupancy;  // [N, 1] in (0,1)
  SknetBatch sknet;                      // only meaningful when use_sknet
  std::vector<SkinWeights> proj_weights;  // weights used for projection/tokens
};

// Graph builders shared by training and inference. `maps` are per-view
// feature-map nodes (leaves at inference, encoder outputs in training).
SknetBatch sknet_graph(Graph& g, ParamStore& store, const Networks& nets,
                       const EvalContext& ctx, const std::vector<Vec3>& points,
                       const std::vector<Var>& maps);
SrnetBatch srnet_graph(Graph& g, ParamStore& store, const Networks& nets,
                       const EvalContext& ctx, const std::vector<Vec3>& points,
                       const std::vector<Var>& maps);

// Attention fusion of one point's view tokens (feature + visibility normal
// per view, out-of-bounds rows flagged): 2-layer multi-head self-attention
// without positional encodings, mean-pooled and projected to 256. Tokens are
// sorted internally, so any permutation returns bit-identical output.
Eigen::Matrix<double, kFeatureDim, 1> fuse_features(
    const std::vector<Eigen::Matrix<double, kTokenDim, 1>>& tokens,
    const std::vector<uint8_t>& out_of_bounds, ParamStore& store,
    const Networks& nets);

// Spec-level single-point operations.
struct SknetResult {
  SkinWeights weights;
  double outside_prob;
};

// Inference-time evaluator: runs the encoder once per view, then evaluates
// batches of canonical points. Read-only over params; safe to call
// concurrently from batches.
class FieldEvaluator {
 public:
  FieldEvaluator(EvalContext ctx, ParamStore& store, const Networks& nets);

  const EvalContext& context() const { return ctx_; }

  // Throws NoVisibleViewError if every projection of X is invalid.
  SknetResult sknet_forward(const Vec3& X) const;
  // Falls back to nn_skin weights internally on NoVisibleView.
  double srnet_forward(const Vec3& X) const;

  void eval_occupancy(const std::vector<Vec3>& points, std::vector<double>* out) const;
  void eval_skin(const std::vector<Vec3>& points, std::vector<SkinWeights>* weights,
                 std::vector<double>* outside = nullptr) const;

 private:
  EvalContext ctx_;
  ParamStore& store_;
  const Networks& nets_;
  std::vector<Tensor> maps_;
};

}  // namespace ava

#pragma once

#include "ava/adam.hpp"
#include "ava/graph.hpp"

namespace ava {

// Dense per-view feature map at a fixed stride over input pixels.
struct FeatureMap {
  Tensor data;  // [256, H', W'] with H' = ceil(H/stride)
  int stride = 4;
};

// Pixel-aligned feature at input-pixel location x: bilinear interpolation of
// the four neighboring feature cells (cell centers at (i+0.5)*stride).
// Out-of-bounds or invisible points return zeros plus a flag the fusion
// module consumes.
struct SampledFeature {
  Eigen::Matrix<double, kFeatureDim, 1> feature;
  bool out_of_bounds = false;
};
SampledFeature sample_feature(const FeatureMap& map, const Vec2& x, int image_w,
                              int image_h, bool projection_valid = true);

// Reference convolutional encoder: four stride-2 conv blocks
// (5 -> 32 -> 64 -> 128 -> 256, kernel 3, group norm of 8, ReLU), two
// residual blocks at stride 16, bilinearly resized to stride 4. Receptive
// field far exceeds 31 input pixels per cell.
struct Encoder {
  int in_channels = 5;
  std::string prefix = "encoder.";
  static constexpr int kStride = 4;

  void init(ParamStore& store, RngStream& rng) const;
  std::vector<std::string> param_names() const;

  // Differentiable forward on the tape; image is [C,H,W].
  Var forward(Graph& g, ParamStore& store, const Tensor& image) const;

  // Plain inference convenience.
  FeatureMap encode(ParamStore& store, const Tensor& image) const;
};

}  // namespace ava

#include "ava/encoder.hpp"

namespace ava {

namespace {
constexpr int kBlockChannels[4] = {32, 64, 128, 256};
constexpr int kGroups = 8;
}  // namespace

SampledFeature sample_feature(const FeatureMap& map, const Vec2& x, int image_w,
                              int image_h, bool projection_valid) {
  SampledFeature out;
  out.feature.setZero();
  if (!projection_valid || x.x() < 0.0 || x.y() < 0.0 || x.x() >= double(image_w) ||
      x.y() >= double(image_h)) {
    out.out_of_bounds = true;
    return out;
  }
  const int c = map.data.shape[0], h = map.data.shape[1], w = map.data.shape[2];
  // Edge-replicated sampling: the coordinate is clamped into the cell-center
  // range before interpolation.
  const double gx = std::clamp(x.x() / map.stride - 0.5, 0.0, double(w - 1));
  const double gy = std::clamp(x.y() / map.stride - 0.5, 0.0, double(h - 1));
  const int x0 = int(std::floor(gx));
  const int y0 = int(std::floor(gy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = gx - x0, fy = gy - y0;
  const double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx;
  const double w10 = fy * (1 - fx), w11 = fy * fx;
  for (int ch = 0; ch < c; ++ch) {
    const auto at = [&](int yy, int xx) {
      return map.data.data[size_t((ch * h + yy) * w + xx)];
    };
    out.feature[ch] =
        w00 * at(y0, x0) + w01 * at(y0, x1) + w10 * at(y1, x0) + w11 * at(y1, x1);
  }
  return out;
}

void Encoder::init(ParamStore& store, RngStream& rng) const {
  int cin = in_channels;
  for (int b = 0; b < 4; ++b) {
    const int cout = kBlockChannels[b];
    const std::string base = prefix + "block" + std::to_string(b) + ".";
    init_param(store, base + "w", {cout, cin * 9}, rng, 1.0, cin * 9);
    init_param_zero(store, base + "b", {cout});
    init_param_const(store, base + "gamma", {cout}, 1.0);
    init_param_zero(store, base + "beta", {cout});
    cin = cout;
  }
  for (int r = 0; r < 2; ++r) {
    for (int s = 0; s < 2; ++s) {
      const std::string base =
          prefix + "res" + std::to_string(r) + "." + std::to_string(s) + ".";
      init_param(store, base + "w", {256, 256 * 9}, rng, 1.0, 256 * 9);
      init_param_zero(store, base + "b", {256});
      init_param_const(store, base + "gamma", {256}, 1.0);
      init_param_zero(store, base + "beta", {256});
    }
  }
}

std::vector<std::string> Encoder::param_names() const {
  std::vector<std::string> names;
  for (int b = 0; b < 4; ++b)
    for (const char* leaf : {"w", "b", "gamma", "beta"})
      names.push_back(prefix + "block" + std::to_string(b) + "." + leaf);
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s)
      for (const char* leaf : {"w", "b", "gamma", "beta"})
        names.push_back(prefix + "res" + std::to_string(r) + "." + std::to_string(s) +
                        "." + leaf);
  return names;
}

Var Encoder::forward(Graph& g, ParamStore& store, const Tensor& image) const {
  if (image.shape.size() != 3 || image.shape[0] != in_channels)
    throw ShapeMismatchError("encoder: expected [" + std::to_string(in_channels) +
                             ",H,W] image");
  const int in_h = image.shape[1], in_w = image.shape[2];
  Var x = leaf(g, image);
  for (int b = 0; b < 4; ++b) {
    const std::string base = prefix + "block" + std::to_string(b) + ".";
    x = conv2d(x, param(g, store, base + "w"), param(g, store, base + "b"), 3, 2, 1);
    x = group_norm(x, param(g, store, base + "gamma"), param(g, store, base + "beta"),
                   kGroups);
    x = relu(x);
  }
  for (int r = 0; r < 2; ++r) {
    Var t = x;
    for (int s = 0; s < 2; ++s) {
      const std::string base =
          prefix + "res" + std::to_string(r) + "." + std::to_string(s) + ".";
      t = conv2d(t, param(g, store, base + "w"), param(g, store, base + "b"), 3, 1, 1);
      t = group_norm(t, param(g, store, base + "gamma"),
                     param(g, store, base + "beta"), kGroups);
      if (s == 0) t = relu(t);
    }
    x = relu(add(x, t));
  }
  const int out_h = (in_h + kStride - 1) / kStride;
  const int out_w = (in_w + kStride - 1) / kStride;
  return bilinear_resize(x, out_h, out_w);
}

FeatureMap Encoder::encode(ParamStore& store, const Tensor& image) const {
  Graph g;
  const Var out = forward(g, store, image);
  FeatureMap map;
  map.data = out.val();
  map.stride = kStride;
  return map;
}

}  // namespace ava

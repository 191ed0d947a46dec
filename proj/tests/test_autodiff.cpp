#include <doctest.h>

#include "ava/adam.hpp"
#include "ava/encoder.hpp"
#include "ava/mlp.hpp"

#include "grad_check.hpp"

using namespace ava;
using ava::testing::grad_check;

namespace {

Tensor random_tensor(std::vector<int> shape, RngStream& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("autodiff: composite elementwise + matmul + softmax loss") {
  RngStream rng(1);
  ParamStore store;
  init_param(store, "w1", {6, 8}, rng);
  init_param_zero(store, "b1", {8});
  init_param(store, "w2", {8, 5}, rng);
  const Tensor x = random_tensor({4, 6}, rng);
  const Tensor target = random_tensor({4, 5}, rng, 0.3);

  auto loss = [&](bool backward) {
    Graph g;
    Var h1 = relu(add_rowvec(matmul(leaf(g, x), param(g, store, "w1")),
                             param(g, store, "b1")));
    Var out = softmax_rows(matmul(h1, param(g, store, "w2")));
    Var l = mean_sq_err(out, target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"w1", "b1", "w2"}, 1e-3, 48) < 1e-4);
}

TEST_CASE("autodiff: sigmoid, slice, concat, row ops") {
  RngStream rng(2);
  ParamStore store;
  init_param(store, "w", {10, 7}, rng);
  const Tensor x = random_tensor({5, 10}, rng);
  const Tensor target = random_tensor({5, 3}, rng, 0.2);

  auto loss = [&](bool backward) {
    Graph g;
    Var h = matmul(leaf(g, x), param(g, store, "w"));
    Var a = sigmoid(slice_cols(h, 0, 3));
    Var b = softmax_rows(slice_cols(h, 3, 7));
    Var joined = concat_cols({a, slice_cols(b, 0, 3)});
    Var renorm = div_by_rowscalar(slice_cols(joined, 0, 3), row_sum(joined));
    Var l = mean_sq_err(renorm, target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"w"}, 1e-3, 64) < 1e-4);
}

TEST_CASE("autodiff: conv2d with hand oracle on identity 1x1 kernel") {
  // Identity 1x1 kernel broadcasts input channels to output.
  Graph g;
  ParamStore store;
  init_param_zero(store, "w", {2, 2});
  store.at("w").at2(0, 0) = 1.0;  // out0 <- in0
  store.at("w").at2(1, 1) = 1.0;  // out1 <- in1
  init_param_zero(store, "b", {2});
  RngStream rng(3);
  const Tensor img = random_tensor({2, 4, 4}, rng);
  Var out = conv2d(leaf(g, img), param(g, store, "w"), param(g, store, "b"), 1, 1, 0);
  CHECK(out.val().data == img.data);
}

TEST_CASE("autodiff: conv2d gradients vs finite differences") {
  RngStream rng(4);
  ParamStore store;
  init_param(store, "w", {4, 3 * 9}, rng, 1.0, 27);
  init_param_zero(store, "b", {4});
  const Tensor img = random_tensor({3, 6, 6}, rng);
  const Tensor target = random_tensor({4, 3, 3}, rng, 0.2);

  auto loss = [&](bool backward) {
    Graph g;
    Var out = conv2d(leaf(g, img), param(g, store, "w"), param(g, store, "b"), 3, 2, 1);
    Var l = mean_sq_err(sigmoid(out), target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"w", "b"}, 1e-3, 40) < 1e-4);
}

TEST_CASE("autodiff: group norm gradients") {
  RngStream rng(5);
  ParamStore store;
  init_param(store, "x", {8, 3, 3}, rng);
  init_param_const(store, "gamma", {8}, 1.0);
  init_param_zero(store, "beta", {8});
  const Tensor target = random_tensor({8, 3, 3}, rng, 0.1);

  auto loss = [&](bool backward) {
    Graph g;
    Var out = group_norm(param(g, store, "x"), param(g, store, "gamma"),
                         param(g, store, "beta"), 4);
    Var l = mean_sq_err(out, target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"x", "gamma", "beta"}, 1e-4, 40) < 1e-4);
}

TEST_CASE("autodiff: bilinear resize and sample gradients") {
  RngStream rng(6);
  ParamStore store;
  init_param(store, "map", {3, 5, 5}, rng);
  std::vector<Vec2> coords = {{0.0, 0.0}, {1.5, 2.25}, {3.9, 0.1}, {-0.4, 4.6}};
  std::vector<uint8_t> valid = {1, 1, 1, 0};
  const Tensor target = random_tensor({4, 3}, rng, 0.2);
  const Tensor target2 = random_tensor({3, 3, 3}, rng, 0.2);

  auto loss = [&](bool backward) {
    Graph g;
    Var m = param(g, store, "map");
    Var s = bilinear_sample(m, coords, valid);
    Var r = bilinear_resize(m, 3, 3);
    Var l = add_scaled(mean_sq_err(s, target), mean_sq_err(r, target2), 1.0, 1.0);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"map"}, 1e-4, 75) < 1e-4);

  // Exact-cell-center and midpoint semantics.
  Graph g;
  Var m = param(g, store, "map");
  Var s = bilinear_sample(m, {{2.0, 3.0}, {2.5, 3.0}}, {1, 1});
  const Tensor& tm = store.at("map");
  for (int c = 0; c < 3; ++c) {
    const double center = tm.data[size_t((c * 5 + 3) * 5 + 2)];
    const double right = tm.data[size_t((c * 5 + 3) * 5 + 3)];
    CHECK(s.val().at2(0, c) == doctest::Approx(center));
    CHECK(s.val().at2(1, c) == doctest::Approx(0.5 * (center + right)));
  }
}

TEST_CASE("autodiff: multi-head attention gradients and invariances") {
  RngStream rng(7);
  ParamStore store;
  const int d = 16, v = 3, heads = 4;
  for (const char* n : {"wq", "wk", "wv", "wo"})
    init_param(store, n, {d, d}, rng, 0.8);
  for (const char* n : {"bq", "bk", "bv", "bo"}) init_param_zero(store, n, {d});
  const Tensor x = random_tensor({2 * v, d}, rng);
  const Tensor target = random_tensor({2, d}, rng, 0.3);

  auto run = [&](const Tensor& input, bool backward) {
    Graph g;
    Var out = mha(leaf(g, input), param(g, store, "wq"), param(g, store, "bq"),
                  param(g, store, "wk"), param(g, store, "bk"),
                  param(g, store, "wv"), param(g, store, "bv"),
                  param(g, store, "wo"), param(g, store, "bo"), v, heads);
    Var pooled = mean_groups(out, v);
    Var l = mean_sq_err(pooled, target);
    if (backward) g.backward(l.id);
    return std::make_pair(ava::testing::LossEval{l.val().data[0], g.activation_signature()},
                          pooled.val());
  };
  auto loss = [&](bool backward) { return run(x, backward).first; };
  CHECK(grad_check(loss, store, {"wq", "bq", "wk", "wv", "wo", "bo"}, 1e-3, 32) < 1e-4);

  // Permuting rows within a group then mean-pooling is invariant.
  Tensor xp = x;
  for (int c = 0; c < d; ++c) {
    std::swap(xp.at2(0, c), xp.at2(2, c));  // swap tokens 0 and 2 of group 0
  }
  const Tensor base = run(x, false).second;
  const Tensor perm = run(xp, false).second;
  for (int c = 0; c < d; ++c)
    CHECK(perm.at2(0, c) == doctest::Approx(base.at2(0, c)).epsilon(1e-12));
}

TEST_CASE("autodiff: replace_masked_rows routes gradient to the embedding") {
  RngStream rng(8);
  ParamStore store;
  init_param(store, "x", {4, 5}, rng);
  init_param(store, "emb", {1, 5}, rng);
  const Tensor target = random_tensor({4, 5}, rng, 0.2);
  std::vector<uint8_t> mask = {0, 1, 0, 1};

  auto loss = [&](bool backward) {
    Graph g;
    Var out = replace_masked_rows(param(g, store, "x"), param(g, store, "emb"), mask);
    Var l = mean_sq_err(out, target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  CHECK(grad_check(loss, store, {"x", "emb"}, 1e-4, 25) < 1e-4);
}

TEST_CASE("encoder: zero image with zero biases maps to zero") {
  RngStream rng(9);
  ParamStore store;
  Encoder enc;
  enc.init(store, rng);
  const Tensor zero_img({5, 16, 16});
  const FeatureMap map = enc.encode(store, zero_img);
  CHECK(map.data.shape == std::vector<int>{256, 4, 4});
  double mx = 0.0;
  for (double v : map.data.data) mx = std::max(mx, std::abs(v));
  CHECK(mx == doctest::Approx(0.0));
}

TEST_CASE("encoder: deterministic forward and ceil(H/stride) shape") {
  RngStream rng(10);
  ParamStore store;
  Encoder enc;
  enc.init(store, rng);
  const Tensor img = random_tensor({5, 19, 23}, rng, 0.5);
  const FeatureMap a = enc.encode(store, img);
  const FeatureMap b = enc.encode(store, img);
  CHECK(a.data.data == b.data.data);
  CHECK(a.data.shape == std::vector<int>{256, (19 + 3) / 4, (23 + 3) / 4});
  for (double v : a.data.data) CHECK(std::isfinite(v));
}

TEST_CASE("encoder: parameter gradients vs finite differences on 16x16 input") {
  RngStream rng(11);
  ParamStore store;
  Encoder enc;
  enc.init(store, rng);
  const Tensor img = random_tensor({5, 16, 16}, rng, 0.5);
  Tensor target({256, 4, 4});
  RngStream trng(12);
  for (auto& v : target.data) v = trng.normal() * 0.05;

  auto loss = [&](bool backward) {
    Graph g;
    Var out = enc.forward(g, store, img);
    Var l = mean_sq_err(out, target);
    if (backward) g.backward(l.id);
    return ava::testing::LossEval{l.val().data[0], g.activation_signature()};
  };
  // Checks a seeded subsample of every parameter tensor.
  CHECK(grad_check(loss, store, enc.param_names(), 1e-3, 6) < 1e-4);
}

TEST_CASE("sample_feature: cell center, midpoint, out of bounds") {
  FeatureMap map;
  map.stride = 4;
  map.data = Tensor({kFeatureDim, 3, 3});
  RngStream rng(13);
  for (auto& v : map.data.data) v = rng.normal();

  // Input pixel (i+0.5)*stride lands exactly on feature cell i.
  const auto center = sample_feature(map, Vec2(6.0, 10.0), 12, 12);  // cell (1,2)
  CHECK(!center.out_of_bounds);
  for (int c = 0; c < 4; ++c)
    CHECK(center.feature[c] ==
          doctest::Approx(map.data.data[size_t((c * 3 + 2) * 3 + 1)]));

  const auto mid = sample_feature(map, Vec2(8.0, 10.0), 12, 12);
  for (int c = 0; c < 4; ++c) {
    const double lhs = map.data.data[size_t((c * 3 + 2) * 3 + 1)];
    const double rhs = map.data.data[size_t((c * 3 + 2) * 3 + 2)];
    CHECK(mid.feature[c] == doctest::Approx(0.5 * (lhs + rhs)));
  }

  const auto oob = sample_feature(map, Vec2(-1.0, 5.0), 12, 12);
  CHECK(oob.out_of_bounds);
  CHECK(oob.feature.norm() == 0.0);
  const auto invalid = sample_feature(map, Vec2(5.0, 5.0), 12, 12, false);
  CHECK(invalid.out_of_bounds);
}

TEST_CASE("sample_feature matches scalar bilinear oracle on random probes") {
  FeatureMap map;
  map.stride = 4;
  map.data = Tensor({kFeatureDim, 8, 8});
  RngStream rng(14);
  for (auto& v : map.data.data) v = rng.normal();
  const int img = 32;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 x(rng.uniform(0.0, img - 1e-9), rng.uniform(0.0, img - 1e-9));
    const auto fast = sample_feature(map, x, img, img);
    REQUIRE(!fast.out_of_bounds);
    // Naive scalar loop.
    const double gx = x.x() / 4.0 - 0.5, gy = x.y() / 4.0 - 0.5;
    for (int c = 0; c < kFeatureDim; c += 37) {
      auto at = [&](int yy, int xx) {
        yy = std::clamp(yy, 0, 7);
        xx = std::clamp(xx, 0, 7);
        return map.data.data[size_t((c * 8 + yy) * 8 + xx)];
      };
      const int x0 = int(std::floor(gx)), y0 = int(std::floor(gy));
      const double fx = gx - x0, fy = gy - y0;
      double expect = 0.0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          expect += (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx) * at(y0 + dy, x0 + dx);
      CHECK(fast.feature[c] == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("adam: zero gradients leave params unchanged from fresh state") {
  ParamStore store;
  RngStream rng(15);
  init_param(store, "w", {3, 3}, rng);
  const Tensor before = store.at("w");
  AdamState state;
  store.grads.clear();
  store.grad("w");  // zero gradient tensor
  adam_step(store, state, 1e-3);
  CHECK(store.at("w").data == before.data);
}

TEST_CASE("adam: step magnitude approaches lr under constant unit gradient") {
  ParamStore store;
  init_param_zero(store, "x", {1});
  AdamState state;
  double prev = 0.0;
  double step = 0.0;
  for (int t = 0; t < 200; ++t) {
    store.zero_grads();
    store.grad("x").data[0] = 1.0;
    adam_step(store, state, 1e-3);
    step = prev - store.at("x").data[0];
    prev = store.at("x").data[0];
  }
  CHECK(step == doctest::Approx(1e-3).epsilon(0.05));
}

TEST_CASE("adam: NaN gradient raises") {
  ParamStore store;
  init_param_zero(store, "x", {1});
  AdamState state;
  store.grad("x").data[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(store, state, 1e-3), NonFiniteGradientError);
}

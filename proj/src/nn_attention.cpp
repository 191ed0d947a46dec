#include "ava/graph.hpp"
#include "ava/parallel.hpp"

#include <memory>

namespace ava {

Var bilinear_sample(Var map, const std::vector<Vec2>& coords,
                    const std::vector<uint8_t>& valid) {
  const Tensor& tm = map.val();
  if (tm.shape.size() != 3) throw ShapeMismatchError("bilinear_sample: map rank");
  const int c = tm.shape[0], h = tm.shape[1], w = tm.shape[2];
  const int n = int(coords.size());
  if (valid.size() != coords.size()) throw ShapeMismatchError("bilinear_sample: mask");

  struct Tap {
    int x0, x1, y0, y1;
    double fx, fy;
  };
  auto taps = std::make_shared<std::vector<Tap>>(size_t(n));
  Tensor out({n, c});
  for (int i = 0; i < n; ++i) {
    if (!valid[size_t(i)]) continue;
    // Edge-replicated: coordinates clamped into the cell-center range.
    const double gx = std::clamp(coords[size_t(i)].x(), 0.0, double(w - 1));
    const double gy = std::clamp(coords[size_t(i)].y(), 0.0, double(h - 1));
    Tap t;
    t.x0 = int(std::floor(gx));
    t.y0 = int(std::floor(gy));
    t.x1 = std::min(t.x0 + 1, w - 1);
    t.y1 = std::min(t.y0 + 1, h - 1);
    t.fx = gx - t.x0;
    t.fy = gy - t.y0;
    (*taps)[size_t(i)] = t;
    const double w00 = (1 - t.fy) * (1 - t.fx), w01 = (1 - t.fy) * t.fx;
    const double w10 = t.fy * (1 - t.fx), w11 = t.fy * t.fx;
    for (int ch = 0; ch < c; ++ch) {
      const auto at = [&](int yy, int xx) { return tm.data[size_t((ch * h + yy) * w + xx)]; };
      out.at2(i, ch) = w00 * at(t.y0, t.x0) + w01 * at(t.y0, t.x1) +
                       w10 * at(t.y1, t.x0) + w11 * at(t.y1, t.x1);
    }
  }

  Graph& g = *map.g;
  const int im = map.id;
  const std::vector<uint8_t> mask = valid;
  const int id = g.add(std::move(out), [im, taps, mask, c, h, w](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dm = gg.grad(im);
    for (int i = 0; i < d.rows(); ++i) {
      if (!mask[size_t(i)]) continue;
      const auto& t = (*taps)[size_t(i)];
      const double w00 = (1 - t.fy) * (1 - t.fx), w01 = (1 - t.fy) * t.fx;
      const double w10 = t.fy * (1 - t.fx), w11 = t.fy * t.fx;
      for (int ch = 0; ch < c; ++ch) {
        const double dv = d.at2(i, ch);
        dm.data[size_t((ch * h + t.y0) * w + t.x0)] += dv * w00;
        dm.data[size_t((ch * h + t.y0) * w + t.x1)] += dv * w01;
        dm.data[size_t((ch * h + t.y1) * w + t.x0)] += dv * w10;
        dm.data[size_t((ch * h + t.y1) * w + t.x1)] += dv * w11;
      }
    }
  });
  return {&g, id};
}

namespace {

// Scaled-dot-product self-attention within each consecutive block of
// `group` rows; heads split the feature dimension.
Var attention_mix(Var q, Var k, Var v, int group, int heads) {
  const Tensor& tq = q.val();
  const int rows = tq.rows(), d = tq.cols();
  if (rows % group != 0 || d % heads != 0) throw ShapeMismatchError("attention_mix");
  const int n = rows / group;
  const int dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(double(dh));

  // Attention matrices saved for backward: [n][heads][group*group].
  auto attn = std::make_shared<std::vector<double>>(size_t(n) * heads * group * group);
  Tensor out({rows, d});
  const Tensor &tk = k.val(), &tv = v.val();
  par_for(n, [&](int64_t b) {
    const int base = int(b) * group;
    for (int hh = 0; hh < heads; ++hh) {
      const int off = hh * dh;
      double* a = attn->data() + ((size_t(b) * heads + size_t(hh)) * group * group);
      for (int i = 0; i < group; ++i) {
        double mx = -std::numeric_limits<double>::max();
        for (int j = 0; j < group; ++j) {
          double s = 0.0;
          for (int e = 0; e < dh; ++e)
            s += tq.at2(base + i, off + e) * tk.at2(base + j, off + e);
          a[i * group + j] = s * inv_sqrt;
          mx = std::max(mx, a[i * group + j]);
        }
        double sum = 0.0;
        for (int j = 0; j < group; ++j) {
          a[i * group + j] = std::exp(a[i * group + j] - mx);
          sum += a[i * group + j];
        }
        for (int j = 0; j < group; ++j) a[i * group + j] /= sum;
        for (int e = 0; e < dh; ++e) {
          double acc = 0.0;
          for (int j = 0; j < group; ++j)
            acc += a[i * group + j] * tv.at2(base + j, off + e);
          out.at2(base + i, off + e) = acc;
        }
      }
    }
  });

  Graph& g = *q.g;
  const int iq = q.id, ik = k.id, iv = v.id;
  const int id = g.add(std::move(out), [iq, ik, iv, n, group, heads, dh, inv_sqrt,
                                        attn](Graph& gg, int self) {
    const Tensor& dout = gg.grad(self);
    const Tensor& vq = gg.value(iq);
    const Tensor& vk = gg.value(ik);
    const Tensor& vv = gg.value(iv);
    Tensor& dq = gg.grad(iq);
    Tensor& dk = gg.grad(ik);
    Tensor& dv = gg.grad(iv);
    par_for(n, [&](int64_t b) {
      const int base = int(b) * group;
      std::vector<double> da(size_t(group) * size_t(group));
      for (int hh = 0; hh < heads; ++hh) {
        const int off = hh * dh;
        const double* a = attn->data() + ((size_t(b) * heads + size_t(hh)) * group * group);
        for (int i = 0; i < group; ++i) {
          for (int j = 0; j < group; ++j) {
            double s = 0.0;
            for (int e = 0; e < dh; ++e)
              s += dout.at2(base + i, off + e) * vv.at2(base + j, off + e);
            da[size_t(i * group + j)] = s;
          }
        }
        // dV = A^T dO
        for (int j = 0; j < group; ++j)
          for (int e = 0; e < dh; ++e) {
            double acc = 0.0;
            for (int i = 0; i < group; ++i)
              acc += a[i * group + j] * dout.at2(base + i, off + e);
            dv.at2(base + j, off + e) += acc;
          }
        // Softmax backward then chain into Q and K.
        for (int i = 0; i < group; ++i) {
          double dot = 0.0;
          for (int j = 0; j < group; ++j)
            dot += da[size_t(i * group + j)] * a[i * group + j];
          for (int j = 0; j < group; ++j) {
            const double ds = a[i * group + j] * (da[size_t(i * group + j)] - dot) * inv_sqrt;
            for (int e = 0; e < dh; ++e) {
              dq.at2(base + i, off + e) += ds * vk.at2(base + j, off + e);
              dk.at2(base + j, off + e) += ds * vq.at2(base + i, off + e);
            }
          }
        }
      }
    });
  });
  return {&g, id};
}

}  // namespace

Var mha(Var x, Var wq, Var bq, Var wk, Var bk, Var wv, Var bv, Var wo, Var bo,
        int group, int heads) {
  const Var q = add_rowvec(matmul(x, wq), bq);
  const Var k = add_rowvec(matmul(x, wk), bk);
  const Var v = add_rowvec(matmul(x, wv), bv);
  const Var mixed = attention_mix(q, k, v, group, heads);
  const Var projected = add_rowvec(matmul(mixed, wo), bo);
  return add(x, projected);  // residual
}

Var mean_groups(Var x, int group) {
  const Tensor& tx = x.val();
  if (tx.rows() % group != 0) throw ShapeMismatchError("mean_groups");
  const int n = tx.rows() / group, c = tx.cols();
  const double inv = 1.0 / double(group);
  Tensor out({n, c});
  for (int b = 0; b < n; ++b)
    for (int j = 0; j < c; ++j) {
      double s = 0.0;
      for (int i = 0; i < group; ++i) s += tx.at2(b * group + i, j);
      out.at2(b, j) = s * inv;
    }
  Graph& g = *x.g;
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix, group, inv](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    for (int b = 0; b < d.rows(); ++b)
      for (int j = 0; j < d.cols(); ++j) {
        const double dv = d.at2(b, j) * inv;
        for (int i = 0; i < group; ++i) dx.at2(b * group + i, j) += dv;
      }
  });
  return {&g, id};
}

Var replace_rows_with_constants(Var x, const Tensor& rows,
                                const std::vector<uint8_t>& mask) {
  const Tensor& tx = x.val();
  if (!tx.same_shape(rows)) throw ShapeMismatchError("replace_rows_with_constants");
  if (int(mask.size()) != tx.rows())
    throw ShapeMismatchError("replace_rows_with_constants: mask");
  Tensor out = tx;
  for (int r = 0; r < tx.rows(); ++r)
    if (mask[size_t(r)])
      for (int c = 0; c < tx.cols(); ++c) out.at2(r, c) = rows.at2(r, c);
  Graph& g = *x.g;
  const int ix = x.id;
  const std::vector<uint8_t> m = mask;
  const int id = g.add(std::move(out), [ix, m](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    for (int r = 0; r < d.rows(); ++r) {
      if (m[size_t(r)]) continue;
      for (int c = 0; c < d.cols(); ++c) dx.at2(r, c) += d.at2(r, c);
    }
  });
  return {&g, id};
}

Var stack_groups(const std::vector<Var>& xs) {
  if (xs.empty()) throw EmptyInputError("stack_groups");
  const int v = int(xs.size());
  const int n = xs[0].val().rows(), c = xs[0].val().cols();
  for (const auto& x : xs)
    if (x.val().rows() != n || x.val().cols() != c)
      throw ShapeMismatchError("stack_groups");
  Tensor out({n * v, c});
  std::vector<int> ids;
  for (int j = 0; j < v; ++j) {
    ids.push_back(xs[size_t(j)].id);
    const Tensor& t = xs[size_t(j)].val();
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < c; ++col) out.at2(r * v + j, col) = t.at2(r, col);
  }
  Graph& g = *xs[0].g;
  const int id = g.add(std::move(out), [ids, v, n, c](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    for (int j = 0; j < v; ++j) {
      Tensor& dx = gg.grad(ids[size_t(j)]);
      for (int r = 0; r < n; ++r)
        for (int col = 0; col < c; ++col) dx.at2(r, col) += d.at2(r * v + j, col);
    }
  });
  return {&g, id};
}

Var replace_masked_rows(Var x, Var embedding, const std::vector<uint8_t>& mask) {
  const Tensor& tx = x.val();
  const Tensor& te = embedding.val();
  if (te.size() != tx.cols()) throw ShapeMismatchError("replace_masked_rows");
  if (int(mask.size()) != tx.rows()) throw ShapeMismatchError("replace_masked_rows: mask");
  Tensor out = tx;
  for (int r = 0; r < tx.rows(); ++r)
    if (mask[size_t(r)])
      for (int c = 0; c < tx.cols(); ++c) out.at2(r, c) = te.data[size_t(c)];
  Graph& g = *x.g;
  const int ix = x.id, ie = embedding.id;
  const std::vector<uint8_t> m = mask;
  const int id = g.add(std::move(out), [ix, ie, m](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    Tensor& de = gg.grad(ie);
    for (int r = 0; r < d.rows(); ++r) {
      if (m[size_t(r)]) {
        for (int c = 0; c < d.cols(); ++c) de.data[size_t(c)] += d.at2(r, c);
      } else {
        for (int c = 0; c < d.cols(); ++c) dx.at2(r, c) += d.at2(r, c);
      }
    }
  });
  return {&g, id};
}

}  // namespace ava

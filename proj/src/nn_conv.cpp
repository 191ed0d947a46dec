#include "ava/graph.hpp"

#include <memory>

namespace ava {

namespace {

struct ConvDims {
  int cin, h, w, cout, k, stride, pad, ho, wo;
};

ConvDims conv_dims(const Tensor& x, const Tensor& wt, int kernel, int stride, int pad) {
  if (x.shape.size() != 3 || wt.shape.size() != 2)
    throw ShapeMismatchError("conv2d: bad ranks");
  ConvDims d;
  d.cin = x.shape[0];
  d.h = x.shape[1];
  d.w = x.shape[2];
  d.cout = wt.shape[0];
  d.k = kernel;
  d.stride = stride;
  d.pad = pad;
  if (wt.shape[1] != d.cin * kernel * kernel)
    throw ShapeMismatchError("conv2d: weight columns != Cin*k*k");
  d.ho = (d.h + 2 * pad - kernel) / stride + 1;
  d.wo = (d.w + 2 * pad - kernel) / stride + 1;
  return d;
}

Tensor im2col(const Tensor& x, const ConvDims& d) {
  Tensor cols({d.cin * d.k * d.k, d.ho * d.wo});
  for (int c = 0; c < d.cin; ++c)
    for (int ky = 0; ky < d.k; ++ky)
      for (int kx = 0; kx < d.k; ++kx) {
        const int row = (c * d.k + ky) * d.k + kx;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride + ky - d.pad;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * d.stride + kx - d.pad;
            double v = 0.0;
            if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
              v = x.data[size_t((c * d.h + iy) * d.w + ix)];
            cols.at2(row, oy * d.wo + ox) = v;
          }
        }
      }
  return cols;
}

void col2im_accum(const Tensor& cols, const ConvDims& d, Tensor& dx) {
  for (int c = 0; c < d.cin; ++c)
    for (int ky = 0; ky < d.k; ++ky)
      for (int kx = 0; kx < d.k; ++kx) {
        const int row = (c * d.k + ky) * d.k + kx;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride + ky - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * d.stride + kx - d.pad;
            if (ix < 0 || ix >= d.w) continue;
            dx.data[size_t((c * d.h + iy) * d.w + ix)] += cols.at2(row, oy * d.wo + ox);
          }
        }
      }
}

}  // namespace

Var conv2d(Var x, Var w, Var bias, int kernel, int stride, int pad) {
  const ConvDims d = conv_dims(x.val(), w.val(), kernel, stride, pad);
  if (bias.val().size() != d.cout) throw ShapeMismatchError("conv2d: bias size");
  auto cols = std::make_shared<Tensor>(im2col(x.val(), d));

  Tensor out({d.cout, d.ho, d.wo});
  out.mat(d.cout, d.ho * d.wo).noalias() = w.val().mat() * cols->mat();
  for (int c = 0; c < d.cout; ++c) {
    const double b = bias.val().data[size_t(c)];
    for (int i = 0; i < d.ho * d.wo; ++i) out.data[size_t(c * d.ho * d.wo + i)] += b;
  }

  Graph& g = *x.g;
  const int ix = x.id, iw = w.id, ib = bias.id;
  const int id = g.add(std::move(out), [ix, iw, ib, d, cols](Graph& gg, int self) {
    const Tensor& dout = gg.grad(self);
    const auto dmat = dout.mat(d.cout, d.ho * d.wo);
    gg.grad(iw).mat().noalias() += dmat * cols->mat().transpose();
    Tensor& db = gg.grad(ib);
    for (int c = 0; c < d.cout; ++c)
      for (int i = 0; i < d.ho * d.wo; ++i)
        db.data[size_t(c)] += dout.data[size_t(c * d.ho * d.wo + i)];
    Tensor dcols({d.cin * d.k * d.k, d.ho * d.wo});
    dcols.mat().noalias() = gg.value(iw).mat().transpose() * dmat;
    col2im_accum(dcols, d, gg.grad(ix));
  });
  return {&g, id};
}

Var group_norm(Var x, Var gamma, Var beta, int groups, double eps) {
  const Tensor& tx = x.val();
  if (tx.shape.size() != 3) throw ShapeMismatchError("group_norm: rank");
  const int c = tx.shape[0], h = tx.shape[1], w = tx.shape[2];
  if (c % groups != 0) throw ShapeMismatchError("group_norm: channels % groups");
  if (gamma.val().size() != c || beta.val().size() != c)
    throw ShapeMismatchError("group_norm: affine size");
  const int cg = c / groups;
  const int64_t plane = int64_t(h) * w;
  const int64_t gsize = cg * plane;

  auto stats = std::make_shared<std::vector<double>>(size_t(groups) * 2);
  Tensor out(tx.shape);
  for (int grp = 0; grp < groups; ++grp) {
    const int64_t base = int64_t(grp) * gsize;
    double mean = 0.0;
    for (int64_t i = 0; i < gsize; ++i) mean += tx.data[size_t(base + i)];
    mean /= double(gsize);
    double var = 0.0;
    for (int64_t i = 0; i < gsize; ++i) {
      const double dv = tx.data[size_t(base + i)] - mean;
      var += dv * dv;
    }
    var /= double(gsize);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    (*stats)[size_t(grp) * 2] = mean;
    (*stats)[size_t(grp) * 2 + 1] = inv_std;
    for (int cc = 0; cc < cg; ++cc) {
      const int ch = grp * cg + cc;
      const double gm = gamma.val().data[size_t(ch)];
      const double bt = beta.val().data[size_t(ch)];
      for (int64_t i = 0; i < plane; ++i) {
        const int64_t idx = base + cc * plane + i;
        out.data[size_t(idx)] = (tx.data[size_t(idx)] - mean) * inv_std * gm + bt;
      }
    }
  }

  Graph& g = *x.g;
  const int ix = x.id, ig = gamma.id, ibt = beta.id;
  const int id = g.add(
      std::move(out), [ix, ig, ibt, groups, cg, plane, gsize, stats](Graph& gg, int self) {
        const Tensor& dout = gg.grad(self);
        const Tensor& vx = gg.value(ix);
        const Tensor& vg = gg.value(ig);
        Tensor& dx = gg.grad(ix);
        Tensor& dgamma = gg.grad(ig);
        Tensor& dbeta = gg.grad(ibt);
        for (int grp = 0; grp < groups; ++grp) {
          const int64_t base = int64_t(grp) * gsize;
          const double mean = (*stats)[size_t(grp) * 2];
          const double inv_std = (*stats)[size_t(grp) * 2 + 1];
          // Accumulate dgamma/dbeta and the two group reductions.
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int cc = 0; cc < cg; ++cc) {
            const int ch = grp * cg + cc;
            const double gm = vg.data[size_t(ch)];
            for (int64_t i = 0; i < plane; ++i) {
              const int64_t idx = base + cc * plane + i;
              const double xhat = (vx.data[size_t(idx)] - mean) * inv_std;
              const double dyv = dout.data[size_t(idx)];
              dgamma.data[size_t(ch)] += dyv * xhat;
              dbeta.data[size_t(ch)] += dyv;
              const double dxhat = dyv * gm;
              sum_dxhat += dxhat;
              sum_dxhat_xhat += dxhat * xhat;
            }
          }
          const double inv_n = 1.0 / double(gsize);
          for (int cc = 0; cc < cg; ++cc) {
            const int ch = grp * cg + cc;
            const double gm = vg.data[size_t(ch)];
            for (int64_t i = 0; i < plane; ++i) {
              const int64_t idx = base + cc * plane + i;
              const double xhat = (vx.data[size_t(idx)] - mean) * inv_std;
              const double dxhat = dout.data[size_t(idx)] * gm;
              dx.data[size_t(idx)] +=
                  inv_std * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
            }
          }
        }
      });
  return {&g, id};
}

namespace {
struct LerpAxis {
  int i0, i1;
  double w0, w1;
};

LerpAxis lerp_axis(int out_i, int out_n, int in_n) {
  const double src = (out_i + 0.5) * double(in_n) / double(out_n) - 0.5;
  const double clamped = std::clamp(src, 0.0, double(in_n - 1));
  LerpAxis a;
  a.i0 = int(std::floor(clamped));
  a.i1 = std::min(a.i0 + 1, in_n - 1);
  a.w1 = clamped - double(a.i0);
  a.w0 = 1.0 - a.w1;
  return a;
}
}  // namespace

Var bilinear_resize(Var x, int out_h, int out_w) {
  const Tensor& tx = x.val();
  if (tx.shape.size() != 3) throw ShapeMismatchError("bilinear_resize: rank");
  const int c = tx.shape[0], h = tx.shape[1], w = tx.shape[2];
  Tensor out({c, out_h, out_w});
  for (int oy = 0; oy < out_h; ++oy) {
    const LerpAxis ay = lerp_axis(oy, out_h, h);
    for (int ox = 0; ox < out_w; ++ox) {
      const LerpAxis ax = lerp_axis(ox, out_w, w);
      for (int ch = 0; ch < c; ++ch) {
        const auto in = [&](int yy, int xx) {
          return tx.data[size_t((ch * h + yy) * w + xx)];
        };
        out.data[size_t((ch * out_h + oy) * out_w + ox)] =
            ay.w0 * (ax.w0 * in(ay.i0, ax.i0) + ax.w1 * in(ay.i0, ax.i1)) +
            ay.w1 * (ax.w0 * in(ay.i1, ax.i0) + ax.w1 * in(ay.i1, ax.i1));
      }
    }
  }
  Graph& g = *x.g;
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix, c, h, w, out_h, out_w](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    for (int oy = 0; oy < out_h; ++oy) {
      const LerpAxis ay = lerp_axis(oy, out_h, h);
      for (int ox = 0; ox < out_w; ++ox) {
        const LerpAxis ax = lerp_axis(ox, out_w, w);
        for (int ch = 0; ch < c; ++ch) {
          const double dv = d.data[size_t((ch * out_h + oy) * out_w + ox)];
          dx.data[size_t((ch * h + ay.i0) * w + ax.i0)] += dv * ay.w0 * ax.w0;
          dx.data[size_t((ch * h + ay.i0) * w + ax.i1)] += dv * ay.w0 * ax.w1;
          dx.data[size_t((ch * h + ay.i1) * w + ax.i0)] += dv * ay.w1 * ax.w0;
          dx.data[size_t((ch * h + ay.i1) * w + ax.i1)] += dv * ay.w1 * ax.w1;
        }
      }
    }
  });
  return {&g, id};
}

}  // namespace ava

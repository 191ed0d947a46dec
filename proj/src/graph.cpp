#include "ava/graph.hpp"

namespace ava {

const Tensor& Var::val() const { return g->value(id); }

Tensor& ParamStore::at(const std::string& name) {
  const auto it = values.find(name);
  if (it == values.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads.find(name);
  if (it == grads.end()) it = grads.emplace(name, Tensor(at(name).shape)).first;
  return it->second;
}

int64_t ParamStore::total_params() const {
  int64_t n = 0;
  for (const auto& [k, v] : values) n += v.size();
  return n;
}

int Graph::add(Tensor value, BackwardFn backward) {
  nodes_.push_back({std::move(value), Tensor{}, std::move(backward)});
  return int(nodes_.size()) - 1;
}

Tensor& Graph::grad(int id) {
  Node& n = nodes_[size_t(id)];
  if (n.grad.data.empty()) n.grad = Tensor(n.value.shape);
  return n.grad;
}

void Graph::backward(int loss) {
  if (value(loss).size() != 1) throw ShapeMismatchError("backward: loss not scalar");
  grad(loss).data[0] = 1.0;
  for (int id = int(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[size_t(id)];
    if (n.backward && !n.grad.data.empty()) n.backward(*this, id);
  }
}

Var leaf(Graph& g, Tensor value) { return {&g, g.add(std::move(value))}; }

Var param(Graph& g, ParamStore& store, const std::string& name) {
  Tensor copy = store.at(name);
  const int id = g.add(std::move(copy), [&store, name](Graph& gg, int self) {
    Tensor& dst = store.grad(name);
    const Tensor& src = gg.grad(self);
    for (int64_t i = 0; i < src.size(); ++i) dst.data[size_t(i)] += src.data[size_t(i)];
  });
  return {&g, id};
}

Var matmul(Var a, Var b) {
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.cols() != tb.rows())
    throw ShapeMismatchError("matmul");
  Tensor out({ta.rows(), tb.cols()});
  out.mat().noalias() = ta.mat() * tb.mat();
  Graph& g = *a.g;
  const int ia = a.id, ib = b.id;
  const int id = g.add(std::move(out), [ia, ib](Graph& gg, int self) {
    const Tensor& dout = gg.grad(self);
    gg.grad(ia).mat().noalias() += dout.mat() * gg.value(ib).mat().transpose();
    gg.grad(ib).mat().noalias() += gg.value(ia).mat().transpose() * dout.mat();
  });
  return {&g, id};
}

namespace {
Var binary_same_shape(Var a, Var b, const char* op,
                      const std::function<double(double, double)>& fwd,
                      const std::function<void(Graph&, int, int, int)>& bwd) {
  if (!a.val().same_shape(b.val())) throw ShapeMismatchError(op);
  Tensor out(a.val().shape);
  const Tensor &ta = a.val(), &tb = b.val();
  for (int64_t i = 0; i < out.size(); ++i)
    out.data[size_t(i)] = fwd(ta.data[size_t(i)], tb.data[size_t(i)]);
  Graph& g = *a.g;
  const int ia = a.id, ib = b.id;
  const int id = g.add(std::move(out), [ia, ib, bwd](Graph& gg, int self) {
    bwd(gg, self, ia, ib);
  });
  return {&g, id};
}
}  // namespace

Var add(Var a, Var b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Graph& gg, int self, int ia, int ib) {
        const Tensor& d = gg.grad(self);
        Tensor& da = gg.grad(ia);
        Tensor& db = gg.grad(ib);
        for (int64_t i = 0; i < d.size(); ++i) {
          da.data[size_t(i)] += d.data[size_t(i)];
          db.data[size_t(i)] += d.data[size_t(i)];
        }
      });
}

Var sub(Var a, Var b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Graph& gg, int self, int ia, int ib) {
        const Tensor& d = gg.grad(self);
        Tensor& da = gg.grad(ia);
        Tensor& db = gg.grad(ib);
        for (int64_t i = 0; i < d.size(); ++i) {
          da.data[size_t(i)] += d.data[size_t(i)];
          db.data[size_t(i)] -= d.data[size_t(i)];
        }
      });
}

Var mul(Var a, Var b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Graph& gg, int self, int ia, int ib) {
        const Tensor& d = gg.grad(self);
        const Tensor& va = gg.value(ia);
        const Tensor& vb = gg.value(ib);
        Tensor& da = gg.grad(ia);
        Tensor& db = gg.grad(ib);
        for (int64_t i = 0; i < d.size(); ++i) {
          da.data[size_t(i)] += d.data[size_t(i)] * vb.data[size_t(i)];
          db.data[size_t(i)] += d.data[size_t(i)] * va.data[size_t(i)];
        }
      });
}

Var scale(Var a, double s) {
  Tensor out(a.val().shape);
  for (int64_t i = 0; i < out.size(); ++i) out.data[size_t(i)] = s * a.val().data[size_t(i)];
  Graph& g = *a.g;
  const int ia = a.id;
  const int id = g.add(std::move(out), [ia, s](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& da = gg.grad(ia);
    for (int64_t i = 0; i < d.size(); ++i) da.data[size_t(i)] += s * d.data[size_t(i)];
  });
  return {&g, id};
}

Var add_rowvec(Var x, Var bias) {
  const Tensor& tx = x.val();
  const Tensor& tb = bias.val();
  if (tb.size() != tx.cols()) throw ShapeMismatchError("add_rowvec");
  Tensor out = tx;
  const int n = tx.cols();
  for (int r = 0; r < tx.rows(); ++r)
    for (int c = 0; c < n; ++c) out.at2(r, c) += tb.data[size_t(c)];
  Graph& g = *x.g;
  const int ix = x.id, ib = bias.id;
  const int id = g.add(std::move(out), [ix, ib, n](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    Tensor& db = gg.grad(ib);
    for (int64_t i = 0; i < d.size(); ++i) dx.data[size_t(i)] += d.data[size_t(i)];
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < n; ++c) db.data[size_t(c)] += d.at2(r, c);
  });
  return {&g, id};
}

Var relu(Var x) {
  Tensor out(x.val().shape);
  const Tensor& tx = x.val();
  uint64_t bits = 0xcbf29ce484222325ull;
  for (int64_t i = 0; i < out.size(); ++i) {
    const bool on = tx.data[size_t(i)] > 0.0;
    out.data[size_t(i)] = on ? tx.data[size_t(i)] : 0.0;
    bits = (bits ^ uint64_t(on)) * 0x100000001b3ull;
  }
  Graph& g = *x.g;
  g.fold_signature(bits);
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    const Tensor& v = gg.value(ix);
    Tensor& dx = gg.grad(ix);
    for (int64_t i = 0; i < d.size(); ++i)
      if (v.data[size_t(i)] > 0.0) dx.data[size_t(i)] += d.data[size_t(i)];
  });
  return {&g, id};
}

Var sigmoid(Var x) {
  Tensor out(x.val().shape);
  const Tensor& tx = x.val();
  uint64_t bits = 0xcbf29ce484222325ull;
  for (int64_t i = 0; i < out.size(); ++i) {
    const double z = std::clamp(tx.data[size_t(i)], -30.0, 30.0);
    out.data[size_t(i)] = 1.0 / (1.0 + std::exp(-z));
    bits = (bits ^ uint64_t(z != tx.data[size_t(i)])) * 0x100000001b3ull;
  }
  Graph& g = *x.g;
  g.fold_signature(bits);
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    const Tensor& y = gg.value(self);
    const Tensor& v = gg.value(ix);
    Tensor& dx = gg.grad(ix);
    for (int64_t i = 0; i < d.size(); ++i) {
      if (std::abs(v.data[size_t(i)]) >= 30.0) continue;  // clamped region
      const double s = y.data[size_t(i)];
      dx.data[size_t(i)] += d.data[size_t(i)] * s * (1.0 - s);
    }
  });
  return {&g, id};
}

Var softmax_rows(Var x) {
  const Tensor& tx = x.val();
  Tensor out(tx.shape);
  const int n = tx.cols();
  for (int r = 0; r < tx.rows(); ++r) {
    double mx = -std::numeric_limits<double>::max();
    for (int c = 0; c < n; ++c) mx = std::max(mx, tx.at2(r, c));
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
      out.at2(r, c) = std::exp(tx.at2(r, c) - mx);
      sum += out.at2(r, c);
    }
    for (int c = 0; c < n; ++c) out.at2(r, c) /= sum;
  }
  Graph& g = *x.g;
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix, n](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    const Tensor& y = gg.value(self);
    Tensor& dx = gg.grad(ix);
    for (int r = 0; r < d.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += d.at2(r, c) * y.at2(r, c);
      for (int c = 0; c < n; ++c)
        dx.at2(r, c) += y.at2(r, c) * (d.at2(r, c) - dot);
    }
  });
  return {&g, id};
}

Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw EmptyInputError("concat_cols");
  const int rows = xs[0].val().rows();
  int cols = 0;
  for (const auto& v : xs) {
    if (v.val().rows() != rows) throw ShapeMismatchError("concat_cols");
    cols += v.val().cols();
  }
  Tensor out({rows, cols});
  int offset = 0;
  std::vector<std::pair<int, int>> spans;  // (node id, begin col)
  for (const auto& v : xs) {
    const Tensor& t = v.val();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < t.cols(); ++c) out.at2(r, offset + c) = t.at2(r, c);
    spans.emplace_back(v.id, offset);
    offset += t.cols();
  }
  Graph& g = *xs[0].g;
  const int id = g.add(std::move(out), [spans](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    for (const auto& [node, begin] : spans) {
      Tensor& dx = gg.grad(node);
      for (int r = 0; r < d.rows(); ++r)
        for (int c = 0; c < dx.cols(); ++c) dx.at2(r, c) += d.at2(r, begin + c);
    }
  });
  return {&g, id};
}

Var slice_cols(Var x, int begin, int end) {
  const Tensor& tx = x.val();
  if (begin < 0 || end > tx.cols() || begin >= end) throw ShapeMismatchError("slice_cols");
  Tensor out({tx.rows(), end - begin});
  for (int r = 0; r < tx.rows(); ++r)
    for (int c = begin; c < end; ++c) out.at2(r, c - begin) = tx.at2(r, c);
  Graph& g = *x.g;
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix, begin](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < d.cols(); ++c) dx.at2(r, begin + c) += d.at2(r, c);
  });
  return {&g, id};
}

Var row_sum(Var x) {
  const Tensor& tx = x.val();
  Tensor out({tx.rows(), 1});
  for (int r = 0; r < tx.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < tx.cols(); ++c) s += tx.at2(r, c);
    out.at2(r, 0) = s;
  }
  Graph& g = *x.g;
  const int ix = x.id;
  const int id = g.add(std::move(out), [ix](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    Tensor& dx = gg.grad(ix);
    for (int r = 0; r < dx.rows(); ++r)
      for (int c = 0; c < dx.cols(); ++c) dx.at2(r, c) += d.at2(r, 0);
  });
  return {&g, id};
}

Var div_by_rowscalar(Var x, Var s) {
  const Tensor& tx = x.val();
  const Tensor& ts = s.val();
  if (ts.rows() != tx.rows() || ts.cols() != 1) throw ShapeMismatchError("div_by_rowscalar");
  Tensor out(tx.shape);
  for (int r = 0; r < tx.rows(); ++r)
    for (int c = 0; c < tx.cols(); ++c) out.at2(r, c) = tx.at2(r, c) / ts.at2(r, 0);
  Graph& g = *x.g;
  const int ix = x.id, is = s.id;
  const int id = g.add(std::move(out), [ix, is](Graph& gg, int self) {
    const Tensor& d = gg.grad(self);
    const Tensor& vx = gg.value(ix);
    const Tensor& vs = gg.value(is);
    Tensor& dx = gg.grad(ix);
    Tensor& ds = gg.grad(is);
    for (int r = 0; r < d.rows(); ++r) {
      const double inv = 1.0 / vs.at2(r, 0);
      double acc = 0.0;
      for (int c = 0; c < d.cols(); ++c) {
        dx.at2(r, c) += d.at2(r, c) * inv;
        acc += d.at2(r, c) * vx.at2(r, c);
      }
      ds.at2(r, 0) -= acc * inv * inv;
    }
  });
  return {&g, id};
}

Var mean_sq_err(Var x, const Tensor& target) {
  const Tensor& tx = x.val();
  if (!tx.same_shape(target)) throw ShapeMismatchError("mean_sq_err");
  const double inv_n = 1.0 / double(tx.size());
  double loss = 0.0;
  for (int64_t i = 0; i < tx.size(); ++i) {
    const double diff = tx.data[size_t(i)] - target.data[size_t(i)];
    loss += diff * diff;
  }
  Graph& g = *x.g;
  const int ix = x.id;
  const Tensor tgt = target;
  const int id = g.add(Tensor::scalar(loss * inv_n), [ix, tgt, inv_n](Graph& gg, int self) {
    const double d = gg.grad(self).data[0];
    const Tensor& v = gg.value(ix);
    Tensor& dx = gg.grad(ix);
    for (int64_t i = 0; i < v.size(); ++i)
      dx.data[size_t(i)] += d * 2.0 * inv_n * (v.data[size_t(i)] - tgt.data[size_t(i)]);
  });
  return {&g, id};
}

Var add_scaled(Var a, Var b, double wa, double wb) {
  if (a.val().size() != 1 || b.val().size() != 1) throw ShapeMismatchError("add_scaled");
  Graph& g = *a.g;
  const int ia = a.id, ib = b.id;
  const int id = g.add(Tensor::scalar(wa * a.val().data[0] + wb * b.val().data[0]),
                       [ia, ib, wa, wb](Graph& gg, int self) {
                         const double d = gg.grad(self).data[0];
                         gg.grad(ia).data[0] += wa * d;
                         gg.grad(ib).data[0] += wb * d;
                       });
  return {&g, id};
}

}  // namespace ava

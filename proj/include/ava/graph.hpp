#pragma once

#include "ava/tensor.hpp"

#include <functional>
#include <map>

namespace ava {

class Graph;

// Handle to a node on the tape.
struct Var {
  Graph* g = nullptr;
  int id = -1;
  const Tensor& val() const;
};

// Named persistent parameter tensors with gradient accumulators. Parameters
// live outside the tape; each step re-binds them as leaves.
struct ParamStore {
  std::map<std::string, Tensor> values;
  std::map<std::string, Tensor> grads;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return values.count(name) > 0; }
  Tensor& grad(const std::string& name);  // lazily zero-initialized
  void zero_grads() { grads.clear(); }
  int64_t total_params() const;
};

// Reverse-mode tape. Nodes are appended in topological order; backward runs
// in reverse creation order with fixed-order accumulation, so gradients are
// deterministic.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  int add(Tensor value, BackwardFn backward = nullptr);
  const Tensor& value(int id) const { return nodes_[size_t(id)].value; }
  Tensor& value_mut(int id) { return nodes_[size_t(id)].value; }

  bool has_grad(int id) const { return !nodes_[size_t(id)].grad.data.empty(); }
  Tensor& grad(int id);  // allocates zeros on first touch

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar.
  void backward(int loss);

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

  // Hash of every ReLU/clamp branch taken during forward. Two evaluations
  // with equal signatures lie on the same smooth piece of the loss, which is
  // what makes a finite-difference derivative estimate valid between them.
  uint64_t activation_signature() const { return signature_; }
  void fold_signature(uint64_t bits) {
    signature_ ^= bits + 0x9e3779b97f4a7c15ull + (signature_ << 6) + (signature_ >> 2);
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  uint64_t signature_ = 0;
};

// --- leaves ---
Var leaf(Graph& g, Tensor value);
Var param(Graph& g, ParamStore& store, const std::string& name);

// --- elementwise / linear algebra ---
Var matmul(Var a, Var b);                   // [m,k] x [k,n]
Var add(Var a, Var b);                      // same shape
Var sub(Var a, Var b);
Var mul(Var a, Var b);                      // elementwise
Var scale(Var a, double s);
Var add_rowvec(Var x, Var bias);            // [m,n] + [1,n]
Var relu(Var x);
Var sigmoid(Var x);                         // logits clamped to +-30 so output stays in (0,1)
Var softmax_rows(Var x);
Var concat_cols(const std::vector<Var>& xs);
Var slice_cols(Var x, int begin, int end);
Var row_sum(Var x);                         // [m,n] -> [m,1]
Var div_by_rowscalar(Var x, Var s);         // [m,n] / [m,1]
Var mean_sq_err(Var x, const Tensor& target);  // scalar MSE over all entries
Var add_scaled(Var a, Var b, double wa, double wb);  // scalar combine

// --- image ops (x is [C,H,W]) ---
Var conv2d(Var x, Var w, Var bias, int kernel, int stride, int pad);  // w: [Cout, Cin*k*k]
Var group_norm(Var x, Var gamma, Var beta, int groups, double eps = 1e-5);
Var bilinear_resize(Var x, int out_h, int out_w);

// Bilinear sampling of a [C,Hf,Wf] map at feature-grid coordinates
// (already divided by stride, cell centers at integers). Rows flagged
// invalid produce zeros and receive no gradient.
Var bilinear_sample(Var map, const std::vector<Vec2>& coords,
                    const std::vector<uint8_t>& valid);

// --- attention / fusion ops ---
// Multi-head self-attention with residual over groups of `group` tokens:
// x is [N*group, D]; each consecutive block of `group` rows attends within
// itself. Weights wq..wo are [D,D], biases [1,D].
Var mha(Var x, Var wq, Var bq, Var wk, Var bk, Var wv, Var bv, Var wo, Var bo,
        int group, int heads);

// Mean over each consecutive group of rows: [N*group, C] -> [N, C].
Var mean_groups(Var x, int group);

// Rows where mask != 0 are replaced by the (learned) embedding row [1, C].
Var replace_masked_rows(Var x, Var embedding, const std::vector<uint8_t>& mask);

// Rows where mask != 0 are replaced by the matching row of a constant
// tensor (no gradient into those rows).
Var replace_rows_with_constants(Var x, const Tensor& rows,
                                const std::vector<uint8_t>& mask);

// Interleaves V same-shaped [N, C] inputs into [N*V, C] with row n*V+v
// taken from xs[v] row n (token stacking).
Var stack_groups(const std::vector<Var>& xs);

}  // namespace ava

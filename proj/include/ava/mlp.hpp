#pragma once

#include "ava/adam.hpp"

namespace ava {

// Fully connected stack with ReLU between layers and raw logits out.
struct Mlp {
  std::string prefix;
  std::vector<int> dims;

  int layers() const { return int(dims.size()) - 1; }
  std::string weight_name(int layer) const {
    return prefix + "fc" + std::to_string(layer) + ".w";
  }
  std::string bias_name(int layer) const {
    return prefix + "fc" + std::to_string(layer) + ".b";
  }

  void init(ParamStore& store, RngStream& rng) const {
    for (int l = 0; l < layers(); ++l) {
      init_param(store, weight_name(l), {dims[size_t(l)], dims[size_t(l) + 1]}, rng);
      init_param_zero(store, bias_name(l), {dims[size_t(l) + 1]});
    }
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    for (int l = 0; l < layers(); ++l) {
      names.push_back(weight_name(l));
      names.push_back(bias_name(l));
    }
    return names;
  }

  Var forward(Graph& g, ParamStore& store, Var x) const {
    for (int l = 0; l < layers(); ++l) {
      x = add_rowvec(matmul(x, param(g, store, weight_name(l))),
                     param(g, store, bias_name(l)));
      if (l + 1 < layers()) x = relu(x);
    }
    return x;
  }
};

}  // namespace ava

#pragma once

#include "ava/graph.hpp"
#include "ava/rng.hpp"

namespace ava {

// First/second-moment state for every named parameter.
struct AdamState {
  std::map<std::string, Tensor> m, v;
  int64_t t = 0;
};

// Standard Adam with bias correction, beta = (0.9, 0.999), eps = 1e-8.
// Parameters without an accumulated gradient see a zero gradient (moments
// decay). Throws NonFiniteGradientError if any gradient is non-finite.
void adam_step(ParamStore& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// He-normal initialization. fan_in defaults to the second-to-last dim
// (the input width of [in, out] matmul weights); conv weights [Cout, Cin*k*k]
// pass it explicitly.
void init_param(ParamStore& store, const std::string& name, std::vector<int> shape,
                RngStream& rng, double gain = 1.0, int fan_in = -1);
void init_param_zero(ParamStore& store, const std::string& name, std::vector<int> shape);
void init_param_const(ParamStore& store, const std::string& name,
                      std::vector<int> shape, double value);

}  // namespace ava

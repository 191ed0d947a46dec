#include "ava/adam.hpp"

namespace ava {

void adam_step(ParamStore& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  for (const auto& [name, g] : params.grads)
    if (!g.finite()) throw NonFiniteGradientError("non-finite gradient: " + name);

  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(beta2, double(state.t));
  for (auto& [name, value] : params.values) {
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      state.m.emplace(name, Tensor(value.shape));
      state.v.emplace(name, Tensor(value.shape));
      mit = state.m.find(name);
    }
    Tensor& m = mit->second;
    Tensor& v = state.v.at(name);
    const auto git = params.grads.find(name);
    const Tensor* grad = git == params.grads.end() ? nullptr : &git->second;
    for (int64_t i = 0; i < value.size(); ++i) {
      const double g = grad ? grad->data[size_t(i)] : 0.0;
      m.data[size_t(i)] = beta1 * m.data[size_t(i)] + (1.0 - beta1) * g;
      v.data[size_t(i)] = beta2 * v.data[size_t(i)] + (1.0 - beta2) * g * g;
      const double mhat = m.data[size_t(i)] / bc1;
      const double vhat = v.data[size_t(i)] / bc2;
      value.data[size_t(i)] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void init_param(ParamStore& store, const std::string& name, std::vector<int> shape,
                RngStream& rng, double gain, int fan_in) {
  Tensor t(shape);
  if (fan_in <= 0) fan_in = shape.size() >= 2 ? shape[shape.size() - 2] : shape[0];
  const double std_dev = gain * std::sqrt(2.0 / double(std::max(1, fan_in)));
  for (auto& v : t.data) v = rng.normal() * std_dev;
  store.values[name] = std::move(t);
}

void init_param_zero(ParamStore& store, const std::string& name,
                     std::vector<int> shape) {
  store.values[name] = Tensor(std::move(shape));
}

void init_param_const(ParamStore& store, const std::string& name,
                      std::vector<int> shape, double value) {
  store.values[name] = Tensor::full(std::move(shape), value);
}

}  // namespace ava

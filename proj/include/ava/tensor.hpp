#pragma once

#include "ava/common.hpp"

#include <numeric>

namespace ava {

// Dense row-major double tensor. Shapes are small vectors of dims; rank is
// whatever the op needs (vectors, matrices, C x H x W images).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(size_t(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (int64_t(data.size()) != count(shape)) throw ShapeMismatchError("tensor init");
  }

  static int64_t count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), int64_t(1),
                           [](int64_t a, int b) { return a * b; });
  }
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int64_t size() const { return int64_t(data.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }
  double& at(int64_t i) { return data[size_t(i)]; }
  double at(int64_t i) const { return data[size_t(i)]; }
  double& at2(int r, int c) { return data[size_t(r) * size_t(cols()) + size_t(c)]; }
  double at2(int r, int c) const { return data[size_t(r) * size_t(cols()) + size_t(c)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>;
  using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                     Eigen::Dynamic, Eigen::RowMajor>>;
  MatMap mat() { return MatMap(data.data(), rows(), cols()); }
  ConstMatMap mat() const { return ConstMatMap(data.data(), rows(), cols()); }
  MatMap mat(int r, int c) { return MatMap(data.data(), r, c); }
  ConstMatMap mat(int r, int c) const { return ConstMatMap(data.data(), r, c); }
};

}  // namespace ava

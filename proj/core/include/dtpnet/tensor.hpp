#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dtpnet/errors.hpp"

namespace dtp {

// Dense row-major tensor of rank 1..3. float carries model state, double is
// used for gradient verification. The grad buffer stays empty until a
// backward pass touches the tensor.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;
  std::vector<T> grad;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(count(shape), T(0));
  }

  Tensor(std::vector<int> s, std::vector<T> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != count(shape)) {
      throw ShapeError("tensor: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(shape));
    }
  }

  static std::size_t count(const std::vector<int>& s) {
    if (s.empty() || s.size() > 3) {
      throw ShapeError("tensor: rank must be 1..3, got " +
                       std::to_string(s.size()));
    }
    std::size_t n = 1;
    for (int d : s) {
      if (d < 1) throw ShapeError("tensor: dimension " + std::to_string(d));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }

  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return values.size(); }
  std::string shape_str() const { return shape_str(shape); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }

  // rank-2 row pointer
  T* row(int c) { return values.data() + static_cast<std::size_t>(c) * dim(1); }
  const T* row(int c) const {
    return values.data() + static_cast<std::size_t>(c) * dim(1);
  }

  T& at(int i) { return values[static_cast<std::size_t>(i)]; }
  const T& at(int i) const { return values[static_cast<std::size_t>(i)]; }
  T& at(int i, int j) {
    return values[static_cast<std::size_t>(i) * dim(1) + j];
  }
  const T& at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * dim(1) + j];
  }
  T& at(int i, int j, int k) {
    return values[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  const T& at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
  }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }
  void zero_grad() { grad.assign(values.size(), T(0)); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.values[i] = static_cast<U>(values[i]);
    }
    return out;
  }
};

}  // namespace dtp

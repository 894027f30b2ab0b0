#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtl {

// Dense row-major tensor of doubles. All model math in this library runs in
// 64-bit so that finite-difference checks and bitwise reproducibility tests
// are meaningful.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<size_t> s, double fill = 0.0) : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }

  Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape)) throw std::invalid_argument("tensor shape/data mismatch");
  }

  static size_t count(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
  }

  size_t size() const { return data.size(); }
  size_t dim(size_t i) const { return shape.at(i); }
  size_t rank() const { return shape.size(); }

  // 2-d accessors; most of the model works on [rows, cols] matrices.
  double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
  double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

}  // namespace rtl

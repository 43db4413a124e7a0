#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "bridger/error.h"

namespace bridger::ad {

// Dense row-major tensor. Rank 1 and rank 2 cover everything the model
// needs; a scalar is represented as a rank-1 tensor of size 1.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;

  Tensor() = default;

  explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    values.assign(static_cast<std::size_t>(numel_of(shape)), fill);
  }

  static Tensor from(std::vector<int> s, std::vector<T> v) {
    if (numel_of(s) != static_cast<std::int64_t>(v.size())) {
      throw Error("tensor: values size " + std::to_string(v.size()) +
                  " does not match shape " + shape_str_of(s));
    }
    Tensor t;
    t.shape = std::move(s);
    t.values = std::move(v);
    return t;
  }

  static Tensor scalar(T v) { return from({1}, {v}); }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return numel() == 1; }

  int rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? 1 : 0); }
  int cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 0); }

  T& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }

  T& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  const T& at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols() + c]; }

  static std::string shape_str_of(const std::vector<int>& s) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "}";
    return os.str();
  }

  std::string shape_str() const { return shape_str_of(shape); }
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (const T& v : t.values) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

}  // namespace bridger::ad

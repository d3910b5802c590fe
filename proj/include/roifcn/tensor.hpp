#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace roifcn {

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major tensor of rank 1..4. Small-model scale: shapes are ints,
// storage is a flat std::vector.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (int e : shape_) {
      if (e < 0) throw std::invalid_argument("tensor extent < 0 in " + shape_str(shape_));
      n *= static_cast<std::size_t>(e);
    }
    data_.assign(n, T(0));
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(int i) { return data_[idx1(i)]; }
  const T& operator()(int i) const { return data_[idx1(i)]; }

  T& operator()(int i, int j) { return data_[idx2(i, j)]; }
  const T& operator()(int i, int j) const { return data_[idx2(i, j)]; }

  T& operator()(int c, int i, int j) { return data_[idx3(c, i, j)]; }
  const T& operator()(int c, int i, int j) const { return data_[idx3(c, i, j)]; }

  T& operator()(int o, int c, int i, int j) { return data_[idx4(o, c, i, j)]; }
  const T& operator()(int o, int c, int i, int j) const { return data_[idx4(o, c, i, j)]; }

  void fill(T v) { data_.assign(data_.size(), v); }
  void zero() { fill(T(0)); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  std::size_t idx1(int i) const {
    assert(rank() == 1 && i >= 0 && i < shape_[0]);
    return static_cast<std::size_t>(i);
  }
  std::size_t idx2(int i, int j) const {
    assert(rank() == 2 && i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1]);
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t idx3(int c, int i, int j) const {
    assert(rank() == 3 && c >= 0 && c < shape_[0] && i >= 0 && i < shape_[1] && j >= 0 &&
           j < shape_[2]);
    return (static_cast<std::size_t>(c) * shape_[1] + i) * shape_[2] + j;
  }
  std::size_t idx4(int o, int c, int i, int j) const {
    assert(rank() == 4 && o >= 0 && o < shape_[0] && c >= 0 && c < shape_[1] && i >= 0 &&
           i < shape_[2] && j >= 0 && j < shape_[3]);
    return ((static_cast<std::size_t>(o) * shape_[1] + c) * shape_[2] + i) * shape_[3] + j;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

}  // namespace roifcn

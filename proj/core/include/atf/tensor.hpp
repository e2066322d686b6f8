// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense row-major real array with shape metadata.
 *
 * Feature maps use the N x C x H x W convention. Single images (C x H x W)
 * are promoted to a batch of one before entering the network.
 */
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace atf {

using real = double;

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape &shape);
std::size_t shape_numel(const Shape &shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = 0);
  Tensor(Shape shape, std::vector<real> data);

  static Tensor zeros_like(const Tensor &other) { return Tensor(other.shape_); }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  real *ptr() noexcept { return data_.data(); }
  const real *ptr() const noexcept { return data_.data(); }
  std::span<real> data() noexcept { return data_; }
  std::span<const real> data() const noexcept { return data_; }

  real &operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  /// 4-D accessor (n, c, h, w).
  real &at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  real at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Same data, new shape. Element count must match.
  Tensor reshaped(Shape shape) const &;
  Tensor reshaped(Shape shape) &&;

  void fill(real v);
  bool all_finite() const;

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<real> data_;
};

/// Returns batch element `n` of an N x C x H x W tensor as C x H x W.
Tensor batch_item(const Tensor &t, std::size_t n);
/// Stacks equally shaped C x H x W tensors into N x C x H x W.
Tensor stack_batch(std::span<const Tensor> items);

} // namespace atf

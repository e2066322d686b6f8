// SPDX-License-Identifier: Apache-2.0
#include "atf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "atf/error.hpp"

namespace atf {

std::string shape_str(const Shape &shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, real fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_))
    fail(ErrorKind::kShape, "data size " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
}

Tensor Tensor::reshaped(Shape shape) const & {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_numel(shape) != data_.size())
    fail(ErrorKind::kShape, "cannot reshape " + shape_str(shape_) + " to " +
                                shape_str(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](real v) { return std::isfinite(v); });
}

Tensor batch_item(const Tensor &t, std::size_t n) {
  if (t.rank() != 4 || n >= t.dim(0))
    fail(ErrorKind::kShape, "batch_item on " + shape_str(t.shape()));
  const std::size_t stride = t.dim(1) * t.dim(2) * t.dim(3);
  std::vector<real> data(t.ptr() + n * stride, t.ptr() + (n + 1) * stride);
  return Tensor({t.dim(1), t.dim(2), t.dim(3)}, std::move(data));
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty())
    fail(ErrorKind::kShape, "stack_batch of zero items");
  const Shape &base = items.front().shape();
  if (base.size() != 3)
    fail(ErrorKind::kShape, "stack_batch expects C x H x W items");
  Tensor out({items.size(), base[0], base[1], base[2]});
  const std::size_t stride = shape_numel(base);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != base)
      fail(ErrorKind::kShape, "stack_batch shape " +
                                  shape_str(items[i].shape()) + " vs " +
                                  shape_str(base));
    std::copy(items[i].ptr(), items[i].ptr() + stride, out.ptr() + i * stride);
  }
  return out;
}

} // namespace atf

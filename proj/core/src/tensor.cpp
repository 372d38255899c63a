#include "ausm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ausm/error.hpp"

namespace ausm {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + shape_str(shape_) + " holds " +
                         std::to_string(shape_numel(shape_)) + " elements but " +
                         std::to_string(data_.size()) + " were given");
  }
}

Tensor Tensor::from(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

Tensor Tensor::from(Shape shape, std::initializer_list<float> values) {
  return Tensor(std::move(shape), std::vector<float>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw DimensionError("index rank " + std::to_string(index.size()) + " does not match shape " +
                         shape_str(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) {
      throw DimensionError("index " + std::to_string(i) + " out of range on axis " +
                           std::to_string(axis) + " of shape " + shape_str(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

float& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
float Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

std::size_t Tensor::slice_size() const {
  if (shape_.empty()) throw DimensionError("cannot slice a rank-0 tensor");
  return shape_[0] == 0 ? shape_numel(Shape(shape_.begin() + 1, shape_.end())) : data_.size() / shape_[0];
}

std::span<float> Tensor::slice(std::size_t i) {
  const std::size_t n = slice_size();
  return std::span<float>(data_).subspan(i * n, n);
}

std::span<const float> Tensor::slice(std::size_t i) const {
  const std::size_t n = slice_size();
  return std::span<const float>(data_).subspan(i * n, n);
}

Tensor Tensor::slices(std::size_t begin, std::size_t end) const {
  if (begin > end || end > dim(0)) {
    throw DimensionError("slice range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_str(shape_));
  }
  Shape s = shape_;
  s[0] = end - begin;
  const std::size_t n = slice_size();
  return Tensor(s, std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(begin * n),
                                      data_.begin() + static_cast<std::ptrdiff_t>(end * n)));
}

Tensor Tensor::reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
Tensor Tensor::reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack of zero tensors");
  Shape s{parts.size()};
  s.insert(s.end(), parts[0].shape().begin(), parts[0].shape().end());
  std::vector<float> data;
  data.reserve(shape_numel(s));
  for (const Tensor& p : parts) {
    if (p.shape() != parts[0].shape()) {
      throw DimensionError("stack: shape " + shape_str(p.shape()) + " differs from " +
                           shape_str(parts[0].shape()));
    }
    data.insert(data.end(), p.values().begin(), p.values().end());
  }
  return Tensor(std::move(s), std::move(data));
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw DimensionError("concat_rows: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  Shape s = a.shape();
  s[0] += b.dim(0);
  std::vector<float> data(a.values());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return Tensor(std::move(s), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

}  // namespace ausm

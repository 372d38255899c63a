#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ausm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major float32 array. The last axis is contiguous.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor from(std::initializer_list<float> values);
  static Tensor from(Shape shape, std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t byte_size() const noexcept { return data_.size() * sizeof(float); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  float& at(std::initializer_list<std::size_t> index);
  float at(std::initializer_list<std::size_t> index) const;

  /// Number of elements in one slice along axis 0.
  std::size_t slice_size() const;
  std::span<float> slice(std::size_t i);
  std::span<const float> slice(std::size_t i) const;

  /// Copy of slices [begin, end) along axis 0.
  Tensor slices(std::size_t begin, std::size_t end) const;

  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<float> data_;
};

/// Stack equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

/// Concatenate along axis 0. Trailing dims must agree; empty tensors with
/// leading dim 0 are accepted.
Tensor concat_rows(const Tensor& a, const Tensor& b);

/// Largest absolute elementwise difference. Shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ausm

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace glyphlab {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles (last axis fastest).
class Tensor {
 public:
  Tensor() : shape_{0}, data_{} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  /// Contiguous slab along axis 0.
  std::span<const double> slab(std::size_t i) const;
  std::span<double> slab(std::size_t i);

  void fill(double v);
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

Tensor tensor_new(const Shape& shape, double fill);

/// c[i,j] = sum_t a[i,t] * b[t,j], accumulated in ascending t.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor identity(std::size_t n);

}  // namespace glyphlab

#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "flamegan/error.hpp"

namespace flamegan::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Image batches use NHWC order.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_extents();
  }

  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError("data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  std::vector<Real>& storage() { return data_; }
  const std::vector<Real>& storage() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  /// Elements per leading-axis entry (per sample for a batch).
  std::size_t stride0() const { return shape_.empty() ? 0 : data_.size() / shape_[0]; }

  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                           shape_string(shape));
    }
    shape_ = std::move(shape);
  }

  Tensor reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  bool operator==(const Tensor&) const = default;

 private:
  void check_extents() const {
    for (std::size_t e : shape_) {
      if (e == 0) throw DimensionError("zero extent in shape " + shape_string(shape_));
    }
  }

  Shape shape_;
  std::vector<Real> data_;
};

template <typename Real>
void require_shape(const Tensor<Real>& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected " + shape_string(expected) +
                         ", got " + shape_string(t.shape()));
  }
}

}  // namespace flamegan::nn

/* Copyright 2026 The fisherprune Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FISHERPRUNE_TENSOR_HPP_
#define FISHERPRUNE_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fisherprune/common.hpp"

namespace fisherprune {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    validate_shape();
  }

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (shape_size(shape_) != data_.size())
      throw Error("Tensor", "shape " + shape_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Number of rows when viewed as [shape[0], rest].
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t row_size() const { return rows() == 0 ? 0 : data_.size() / rows(); }

  std::span<double> row(std::size_t i) {
    return std::span<double>(data_).subspan(i * row_size(), row_size());
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * row_size(), row_size());
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * row_size() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * row_size() + c]; }

  Vector& data() noexcept { return data_; }
  const Vector& data() const noexcept { return data_; }

  /// Same data, new shape of equal size.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  /// Rows [begin, end) along the leading dimension.
  Tensor slice_rows(std::size_t begin, std::size_t end) const {
    Shape s = shape_;
    s[0] = end - begin;
    const std::size_t rs = row_size();
    return Tensor(std::move(s), Vector(data_.begin() + begin * rs, data_.begin() + end * rs));
  }

  /// Gathers the listed rows into a new tensor.
  Tensor gather_rows(std::span<const std::size_t> indices) const {
    Shape s = shape_;
    s[0] = indices.size();
    const std::size_t rs = row_size();
    Vector out;
    out.reserve(indices.size() * rs);
    for (std::size_t i : indices) {
      auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return Tensor(std::move(s), std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate_shape() const {
    for (std::size_t d : shape_)
      if (d == 0) throw Error("Tensor", "zero dimension in shape " + shape_string(shape_));
  }

  Shape shape_;
  Vector data_;
};

}  // namespace fisherprune

#endif  // FISHERPRUNE_TENSOR_HPP_

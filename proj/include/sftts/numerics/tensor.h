// Copyright 2026 The sftts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFTTS_NUMERICS_TENSOR_H_
#define SFTTS_NUMERICS_TENSOR_H_

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sftts/common/error.h"

namespace sftts {

using Shape = std::vector<int64_t>;

inline int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

inline std::string ShapeString(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

// Dense row-major tensor. Owns its buffer; copies are deep.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  // Aligned so vectorised kernels take the same path for every buffer;
  // with 16-byte malloc alignment the peeled head of a reduction varies
  // between runs and results differ in the last bits.
  using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(CheckedSize(shape_), fill) {}

  BasicTensor(Shape shape, const std::vector<T>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (static_cast<int64_t>(data_.size()) != NumElements(shape_)) {
      throw ShapeError("tensor: buffer of " + std::to_string(data_.size()) +
                       " elements does not fit shape " + ShapeString(shape_));
    }
  }

  static BasicTensor Scalar(T v) { return BasicTensor(Shape{1}, v); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // Extent of axis `axis`; negative values count from the back.
  int64_t dim(int axis) const {
    if (axis < 0) axis += rank();
    return shape_.at(static_cast<size_t>(axis));
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  Buffer& buffer() { return data_; }
  const Buffer& buffer() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 2-D accessors; no bounds checks beyond the vector's.
  T& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  const T& at(int64_t r, int64_t c) const {
    return data_[static_cast<size_t>(r * shape_[1] + c)];
  }

  T item() const {
    if (data_.size() != 1) {
      throw ShapeError("tensor: item() on shape " + ShapeString(shape_));
    }
    return data_[0];
  }

  BasicTensor Reshaped(Shape shape) const {
    if (NumElements(shape) != size()) {
      throw ShapeError("reshape: " + ShapeString(shape_) + " -> " + ShapeString(shape));
    }
    BasicTensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
  }

  template <typename U>
  BasicTensor<U> Cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  void Fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const BasicTensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  static size_t CheckedSize(const Shape& shape) {
    for (int64_t d : shape) {
      if (d < 0) throw ShapeError("tensor: negative extent in " + ShapeString(shape));
    }
    return static_cast<size_t>(NumElements(shape));
  }

  Shape shape_;
  Buffer data_;
};

using Tensor = BasicTensor<float>;

}  // namespace sftts

#endif  // SFTTS_NUMERICS_TENSOR_H_

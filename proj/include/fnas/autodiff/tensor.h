// Copyright 2026 The DP-FNAS Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FNAS_AUTODIFF_TENSOR_H_
#define FNAS_AUTODIFF_TENSOR_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fnas {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;

  // Validating constructor for externally supplied values: the value count
  // must match the shape and every value must be finite.
  static absl::StatusOr<Tensor> Create(Shape shape, std::vector<double> values);

  static Tensor Zeros(Shape shape);
  static Tensor Filled(Shape shape, double value);
  static Tensor Scalar(double value);
  // Unchecked; used by kernels that produce values from finite inputs.
  static Tensor FromValues(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  // 2-D accessors; no bounds checks.
  double at(std::size_t r, std::size_t c) const {
    return values_[r * shape_[1] + c];
  }
  double& at(std::size_t r, std::size_t c) {
    return values_[r * shape_[1] + c];
  }

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  double SquaredNorm() const;

  // Bitwise equality of shape and values.
  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Tensor(Shape shape, std::vector<double> values)
      : shape_(std::move(shape)), values_(std::move(values)) {}

  Shape shape_;
  std::vector<double> values_;
};

// Ordered name -> tensor map. Iteration order (lexicographic by name) is the
// canonical order for every reduction, flattening and serialization.
class NamedTensors {
 public:
  using Map = std::map<std::string, Tensor>;
  using const_iterator = Map::const_iterator;
  using iterator = Map::iterator;

  NamedTensors() = default;
  explicit NamedTensors(Map values) : values_(std::move(values)) {}

  void Set(const std::string& name, Tensor value) {
    values_[name] = std::move(value);
  }
  bool Contains(const std::string& name) const {
    return values_.count(name) > 0;
  }
  const Tensor* Find(const std::string& name) const;
  const Tensor& at(const std::string& name) const { return values_.at(name); }
  Tensor& at(const std::string& name) { return values_.at(name); }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const_iterator begin() const { return values_.begin(); }
  const_iterator end() const { return values_.end(); }
  iterator begin() { return values_.begin(); }
  iterator end() { return values_.end(); }

  std::vector<std::string> Names() const;
  std::size_t NumElements() const;
  double SquaredNorm() const;
  double L2Norm() const;
  double MaxAbs() const;
  bool AllFinite() const;

  bool SameLayout(const NamedTensors& other) const;
  // Names the first differing key or shape in the error message.
  absl::Status CheckSameLayout(const NamedTensors& other) const;

  NamedTensors ZerosLike() const;
  // Subset with the given names; missing names are an error.
  absl::StatusOr<NamedTensors> Select(std::span<const std::string> names) const;
  // Union; overlapping names are an error.
  absl::StatusOr<NamedTensors> Merge(const NamedTensors& other) const;

  // this += scale * other. Layouts must match (checked by callers).
  void AddScaled(const NamedTensors& other, double scale);
  void Scale(double factor);

  std::vector<double> Flatten() const;
  absl::Status Unflatten(std::span<const double> flat);

  friend bool operator==(const NamedTensors& a,
                         const NamedTensors& b) = default;

 private:
  Map values_;
};

// A named collection of gradients; the key set mirrors the parameters it was
// taken with respect to.
using GradientVector = NamedTensors;

// Labeled examples: features is [n, d], labels holds n class indices.
struct Batch {
  Tensor features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const {
    return features.rank() == 2 ? features.dim(1) : 0;
  }
  Batch Subset(std::span<const std::size_t> indices) const;
  Batch Example(std::size_t i) const;
  static Batch Concat(std::span<const Batch> parts);
};

}  // namespace fnas

#endif  // FNAS_AUTODIFF_TENSOR_H_

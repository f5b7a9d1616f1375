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

#include "fnas/autodiff/tensor.h"

#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace fnas {

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  return absl::StrCat("[", absl::StrJoin(shape, ", "), "]");
}

absl::StatusOr<Tensor> Tensor::Create(Shape shape, std::vector<double> values) {
  if (ShapeSize(shape) != values.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("tensor of shape ", ShapeToString(shape), " needs ",
                     ShapeSize(shape), " values, got ", values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-finite tensor value at flat index ", i));
    }
  }
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::Zeros(Shape shape) { return Filled(std::move(shape), 0.0); }

Tensor Tensor::Filled(Shape shape, double value) {
  const std::size_t n = ShapeSize(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::FromValues(Shape shape, std::vector<double> values) {
  return Tensor(std::move(shape), std::move(values));
}

bool Tensor::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::SquaredNorm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

const Tensor* NamedTensors::Find(const std::string& name) const {
  auto it = values_.find(name);
  return it == values_.end() ? nullptr : &it->second;
}

std::vector<std::string> NamedTensors::Names() const {
  std::vector<std::string> names;
  names.reserve(values_.size());
  for (const auto& [name, _] : values_) names.push_back(name);
  return names;
}

std::size_t NamedTensors::NumElements() const {
  std::size_t n = 0;
  for (const auto& [_, t] : values_) n += t.size();
  return n;
}

double NamedTensors::SquaredNorm() const {
  double s = 0.0;
  for (const auto& [_, t] : values_) {
    for (double v : t.values()) s += v * v;
  }
  return s;
}

double NamedTensors::L2Norm() const { return std::sqrt(SquaredNorm()); }

double NamedTensors::MaxAbs() const {
  double m = 0.0;
  for (const auto& [_, t] : values_) {
    for (double v : t.values()) m = std::max(m, std::abs(v));
  }
  return m;
}

bool NamedTensors::AllFinite() const {
  for (const auto& [_, t] : values_) {
    if (!t.AllFinite()) return false;
  }
  return true;
}

bool NamedTensors::SameLayout(const NamedTensors& other) const {
  return CheckSameLayout(other).ok();
}

absl::Status NamedTensors::CheckSameLayout(const NamedTensors& other) const {
  for (const auto& [name, t] : values_) {
    const Tensor* o = other.Find(name);
    if (o == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat("tensor '", name, "' missing from other collection"));
    }
    if (!o->SameShape(t)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "shape mismatch for '", name, "': ", ShapeToString(t.shape()),
          " vs ", ShapeToString(o->shape())));
    }
  }
  for (const auto& [name, _] : other.values_) {
    if (!Contains(name)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unexpected tensor '", name, "'"));
    }
  }
  return absl::OkStatus();
}

NamedTensors NamedTensors::ZerosLike() const {
  NamedTensors out;
  for (const auto& [name, t] : values_) out.Set(name, Tensor::Zeros(t.shape()));
  return out;
}

absl::StatusOr<NamedTensors> NamedTensors::Select(
    std::span<const std::string> names) const {
  NamedTensors out;
  for (const std::string& name : names) {
    const Tensor* t = Find(name);
    if (t == nullptr) {
      return absl::NotFoundError(absl::StrCat("unknown parameter '", name, "'"));
    }
    out.Set(name, *t);
  }
  return out;
}

absl::StatusOr<NamedTensors> NamedTensors::Merge(
    const NamedTensors& other) const {
  NamedTensors out = *this;
  for (const auto& [name, t] : other) {
    if (out.Contains(name)) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate parameter '", name, "'"));
    }
    out.Set(name, t);
  }
  return out;
}

void NamedTensors::AddScaled(const NamedTensors& other, double scale) {
  for (auto& [name, t] : values_) {
    const Tensor& o = other.at(name);
    auto dst = t.mutable_values();
    auto src = o.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

void NamedTensors::Scale(double factor) {
  for (auto& [_, t] : values_) {
    for (double& v : t.mutable_values()) v *= factor;
  }
}

std::vector<double> NamedTensors::Flatten() const {
  std::vector<double> flat;
  flat.reserve(NumElements());
  for (const auto& [_, t] : values_) {
    flat.insert(flat.end(), t.values().begin(), t.values().end());
  }
  return flat;
}

absl::Status NamedTensors::Unflatten(std::span<const double> flat) {
  if (flat.size() != NumElements()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "flat size ", flat.size(), " != element count ", NumElements()));
  }
  std::size_t k = 0;
  for (auto& [_, t] : values_) {
    for (double& v : t.mutable_values()) v = flat[k++];
  }
  return absl::OkStatus();
}

Batch Batch::Subset(std::span<const std::size_t> indices) const {
  const std::size_t d = dim();
  std::vector<double> values;
  values.reserve(indices.size() * d);
  std::vector<int> out_labels;
  out_labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto row = features.values().subspan(i * d, d);
    values.insert(values.end(), row.begin(), row.end());
    out_labels.push_back(labels[i]);
  }
  return Batch{Tensor::FromValues({indices.size(), d}, std::move(values)),
               std::move(out_labels)};
}

Batch Batch::Example(std::size_t i) const {
  const std::size_t idx[] = {i};
  return Subset(idx);
}

Batch Batch::Concat(std::span<const Batch> parts) {
  std::size_t d = 0;
  std::vector<double> values;
  std::vector<int> labels;
  for (const Batch& b : parts) {
    if (b.size() == 0) continue;
    d = b.dim();
    values.insert(values.end(), b.features.values().begin(),
                  b.features.values().end());
    labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  }
  const std::size_t n = labels.size();
  return Batch{Tensor::FromValues({n, d}, std::move(values)), std::move(labels)};
}

}  // namespace fnas

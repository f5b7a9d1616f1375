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

#ifndef FNAS_TESTS_TESTING_TEST_UTIL_H_
#define FNAS_TESTS_TESTING_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fnas/autodiff/tape.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/dp/rng.h"

namespace fnas::testing {

inline RngStream TestRng(std::uint64_t seed, std::uint64_t salt = 0) {
  return RngStream(seed, 0, salt, StreamPhase::kTest);
}

inline Tensor RandomTensor(const Shape& shape, RngStream& rng,
                           double scale = 1.0) {
  std::vector<double> v(ShapeSize(shape));
  for (double& x : v) x = scale * rng.NextGaussian();
  return Tensor::FromValues(shape, std::move(v));
}

inline Batch RandomBatch(std::size_t n, std::size_t d, int classes,
                         RngStream& rng) {
  Batch b;
  b.features = RandomTensor({n, d}, rng);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(static_cast<int>(rng.NextBelow(classes)));
  }
  return b;
}

// Coordinatewise |a - b| / max(|a|, |b|, floor), maximized over all entries.
inline double MaxRelativeError(const NamedTensors& a, const NamedTensors& b,
                               double floor) {
  double worst = 0.0;
  for (const auto& [name, ta] : a) {
    const Tensor& tb = b.at(name);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double denom = std::max({std::abs(ta[i]), std::abs(tb[i]), floor});
      worst = std::max(worst, std::abs(ta[i] - tb[i]) / denom);
    }
  }
  return worst;
}

// True when some relu input lies within `margin` of its kink, where a
// central difference straddles the non-differentiable point.
inline bool NearReluKink(const Tape& tape, double margin) {
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const NodeId node = static_cast<NodeId>(id);
    if (tape.primitive(node) != Primitive::kRelu) continue;
    for (double v : tape.value(tape.inputs(node)[0]).values()) {
      if (std::abs(v) < margin) return true;
    }
  }
  return false;
}

inline std::vector<double> UlpDistance(const NamedTensors& a,
                                       const NamedTensors& b) {
  std::vector<double> out;
  for (const auto& [name, ta] : a) {
    const Tensor& tb = b.at(name);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double ulp = std::nextafter(std::abs(ta[i]), INFINITY) -
                         std::abs(ta[i]);
      out.push_back(std::abs(ta[i] - tb[i]) / ulp);
    }
  }
  return out;
}

}  // namespace fnas::testing

#endif  // FNAS_TESTS_TESTING_TEST_UTIL_H_

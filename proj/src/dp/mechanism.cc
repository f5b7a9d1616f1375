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

#include "fnas/dp/mechanism.h"

#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"

namespace fnas {
namespace {

absl::Status CheckBound(double bound) {
  if (!(bound > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("clip bound must be > 0, got ", bound));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ClipConfig::Validate() const {
  if (!(r_g > 0.0) || !(r_h > 0.0)) {
    return absl::InvalidArgumentError("clip bounds R_G and R_H must be > 0");
  }
  return absl::OkStatus();
}

absl::Status NoiseConfig::Validate() const {
  if (!(sigma >= 0.0) || !(tau >= 0.0) || std::isinf(sigma) ||
      std::isinf(tau)) {
    return absl::InvalidArgumentError(
        "noise multipliers sigma and tau must be finite and >= 0");
  }
  return absl::OkStatus();
}

absl::Status SubsampleConfig::Validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsampling probability must lie in [0, 1], got ", p));
  }
  return absl::OkStatus();
}

std::vector<std::size_t> PoissonSubsample(std::size_t n, double p,
                                          RngStream& rng) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.NextUniform() < p) kept.push_back(i);
  }
  return kept;
}

absl::StatusOr<GradientVector> Clip(const GradientVector& g, double bound) {
  if (absl::Status s = CheckBound(bound); !s.ok()) return s;
  const double norm = g.L2Norm();
  if (!std::isfinite(norm)) {
    return absl::InvalidArgumentError("cannot clip a gradient with non-finite norm");
  }
  if (norm <= bound) return g;
  double scale = bound / norm;
  GradientVector out = g;
  out.Scale(scale);
  // Rounding can leave the rescaled norm a few ulp above the bound; shrink
  // the factor until it is not.
  while (out.L2Norm() > bound) {
    scale = std::nextafter(scale, 0.0);
    out = g;
    out.Scale(scale);
  }
  return out;
}

absl::Status AddNoiseAndNormalize(GradientVector& sum, double bound,
                                  double noise_multiplier, double count,
                                  RngStream& rng) {
  if (noise_multiplier > 0.0) {
    if (!std::isfinite(bound)) {
      return absl::InvalidArgumentError(
          "Gaussian noise needs a finite clip bound");
    }
    const double stddev = bound * noise_multiplier;
    for (auto& [_, t] : sum) {
      for (double& v : t.mutable_values()) v += stddev * rng.NextGaussian();
    }
  }
  sum.Scale(1.0 / count);
  return absl::OkStatus();
}

absl::StatusOr<std::optional<GradientVector>> Privatize(
    std::span<const GradientVector> per_sample, double bound,
    double noise_multiplier, RngStream& rng) {
  if (absl::Status s = CheckBound(bound); !s.ok()) return s;
  if (!(noise_multiplier >= 0.0)) {
    return absl::InvalidArgumentError("noise multiplier must be >= 0");
  }
  if (per_sample.empty()) return std::optional<GradientVector>();
  GradientVector sum = per_sample[0].ZerosLike();
  for (const GradientVector& g : per_sample) {
    if (absl::Status s = sum.CheckSameLayout(g); !s.ok()) return s;
    absl::StatusOr<GradientVector> clipped = Clip(g, bound);
    if (!clipped.ok()) return clipped.status();
    sum.AddScaled(*clipped, 1.0);
  }
  if (absl::Status s =
          AddNoiseAndNormalize(sum, bound, noise_multiplier,
                               static_cast<double>(per_sample.size()), rng);
      !s.ok()) {
    return s;
  }
  return std::optional<GradientVector>(std::move(sum));
}

absl::StatusOr<double> SensitivityProbe(
    std::span<const GradientVector> per_sample, std::size_t removed,
    double bound) {
  if (removed >= per_sample.size()) {
    return absl::OutOfRangeError("removed index outside the list");
  }
  GradientVector full = per_sample[0].ZerosLike();
  GradientVector neighbor = full;
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    absl::StatusOr<GradientVector> clipped = Clip(per_sample[i], bound);
    if (!clipped.ok()) return clipped.status();
    full.AddScaled(*clipped, 1.0);
    if (i != removed) neighbor.AddScaled(*clipped, 1.0);
  }
  full.AddScaled(neighbor, -1.0);
  return full.L2Norm();
}

}  // namespace fnas

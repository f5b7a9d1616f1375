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

#ifndef FNAS_DP_MECHANISM_H_
#define FNAS_DP_MECHANISM_H_

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/dp/rng.h"

namespace fnas {

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

// Per-example l2 clip bounds for weight (G) and architecture (H) gradients.
// An infinite bound disables clipping.
struct ClipConfig {
  double r_g = 0.01;
  double r_h = 0.1;

  absl::Status Validate() const;

  friend bool operator==(const ClipConfig&, const ClipConfig&) = default;
};

// Noise multipliers: the Gaussian noise added to a clipped sum has standard
// deviation bound * multiplier per coordinate.
struct NoiseConfig {
  double sigma = 1.0;  // weight mechanism
  double tau = 1.0;    // architecture mechanism

  absl::Status Validate() const;

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct SubsampleConfig {
  double p = 1.0;

  absl::Status Validate() const;

  friend bool operator==(const SubsampleConfig&,
                         const SubsampleConfig&) = default;
};

// Each of the n indices is kept independently with probability p; the result
// is sorted. One uniform is drawn per index regardless of p.
std::vector<std::size_t> PoissonSubsample(std::size_t n, double p,
                                          RngStream& rng);

// g / max(1, ||g|| / bound). The output norm, as computed, never exceeds the
// bound and an already-clipped vector passes through bit-for-bit.
absl::StatusOr<GradientVector> Clip(const GradientVector& g, double bound);

// Clips each gradient, sums them in list order, adds N(0, (bound *
// noise_multiplier)^2) to every coordinate in canonical order and divides by
// the list size. An empty list yields nullopt: the caller skips the round.
absl::StatusOr<std::optional<GradientVector>> Privatize(
    std::span<const GradientVector> per_sample, double bound,
    double noise_multiplier, RngStream& rng);

// Adds bound * noise_multiplier * N(0, 1) to each coordinate of `sum` and
// divides by `count`. Shared by Privatize and the full-batch paths.
absl::Status AddNoiseAndNormalize(GradientVector& sum, double bound,
                                  double noise_multiplier, double count,
                                  RngStream& rng);

// l2 distance between the clipped sum of `per_sample` and the clipped sum with
// element `removed` left out.
absl::StatusOr<double> SensitivityProbe(
    std::span<const GradientVector> per_sample, std::size_t removed,
    double bound);

}  // namespace fnas

#endif  // FNAS_DP_MECHANISM_H_

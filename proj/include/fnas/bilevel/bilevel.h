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

#ifndef FNAS_BILEVEL_BILEVEL_H_
#define FNAS_BILEVEL_BILEVEL_H_

#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/nas/search_space.h"

namespace fnas {

struct HyperParameters {
  double xi = 0.05;                // weight learning rate
  double eta = 0.5;                // architecture learning rate
  double fd_epsilon_scale = 0.01;  // finite-difference step, relative
  bool second_order = true;

  absl::Status Validate() const;

  friend bool operator==(const HyperParameters&,
                         const HyperParameters&) = default;
};

// Mean loss L(batch, A, W) and its gradients. Implementations must be pure:
// equal inputs give bit-identical outputs.
class BilevelObjective {
 public:
  virtual ~BilevelObjective() = default;

  virtual absl::StatusOr<double> Loss(const Batch& batch,
                                      const NamedTensors& arch,
                                      const NamedTensors& weights) const = 0;
  virtual absl::StatusOr<GradientVector> GradWeights(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const = 0;
  virtual absl::StatusOr<GradientVector> GradArch(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const = 0;

  // One gradient per example, each with batch-size divisor 1.
  absl::StatusOr<std::vector<GradientVector>> PerSampleGradWeights(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const;
  absl::StatusOr<std::vector<GradientVector>> PerSampleGradArch(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const;
};

// The supernet's cross-entropy loss, differentiated on the tape.
class SupernetObjective : public BilevelObjective {
 public:
  explicit SupernetObjective(Supernet net) : net_(std::move(net)) {}

  const Supernet& supernet() const { return net_; }

  absl::StatusOr<double> Loss(const Batch& batch, const NamedTensors& arch,
                              const NamedTensors& weights) const override;
  absl::StatusOr<GradientVector> GradWeights(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const override;
  absl::StatusOr<GradientVector> GradArch(
      const Batch& batch, const NamedTensors& arch,
      const NamedTensors& weights) const override;

 private:
  absl::StatusOr<GradientVector> Grad(const Batch& batch,
                                      const NamedTensors& arch,
                                      const NamedTensors& weights,
                                      const std::vector<std::string>& wrt) const;

  Supernet net_;
};

// W - xi * grad.
absl::StatusOr<NamedTensors> WeightStep(const NamedTensors& weights,
                                        const GradientVector& grad, double xi);

// W' = W - xi * (sum of the parties' training gradients).
absl::StatusOr<NamedTensors> VirtualStep(const NamedTensors& weights,
                                         const GradientVector& sum_train_grads,
                                         double xi);

// A - eta * grad.
absl::StatusOr<NamedTensors> ArchStep(const NamedTensors& arch,
                                      const GradientVector& grad, double eta);

// (xi / 2 eps) [grad_A L(train, A, W + eps v) - grad_A L(train, A, W - eps v)]:
// the symmetric-difference stand-in for xi times the mixed second derivative
// applied to v.
absl::StatusOr<GradientVector> FiniteDifferenceCorrection(
    const BilevelObjective& objective, const Batch& train,
    const NamedTensors& arch, const NamedTensors& weights,
    const GradientVector& direction, double xi, double fd_epsilon);

// H = grad_A L(val, A, W') - correction with direction grad_W' L(val, A, W').
// With xi = 0 the result is exactly grad_A L(val, A, W').
absl::StatusOr<GradientVector> ArchGradientSecondOrder(
    const BilevelObjective& objective, const Batch& train, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights,
    const NamedTensors& weights_prime, double xi, double fd_epsilon);

// As above with eps = fd_epsilon_scale / ||grad_W' L(val, A, W')||. A norm
// below 1e-12 drops the correction.
absl::StatusOr<GradientVector> ArchGradientSecondOrderRelative(
    const BilevelObjective& objective, const Batch& train, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights,
    const NamedTensors& weights_prime, const HyperParameters& hp);

// Plain validation gradient grad_A L(val, A, W).
absl::StatusOr<GradientVector> ArchGradientFirstOrder(
    const BilevelObjective& objective, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights);

inline constexpr double kMinDirectionNorm = 1e-12;

}  // namespace fnas

#endif  // FNAS_BILEVEL_BILEVEL_H_

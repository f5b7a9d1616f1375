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

#include "fnas/bilevel/bilevel.h"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "fnas/autodiff/tape.h"

namespace fnas {
namespace {

absl::StatusOr<NamedTensors> Step(const NamedTensors& x,
                                  const GradientVector& grad, double rate) {
  if (absl::Status s = x.CheckSameLayout(grad); !s.ok()) return s;
  NamedTensors out = x;
  out.AddScaled(grad, -rate);
  return out;
}

}  // namespace

absl::Status HyperParameters::Validate() const {
  if (!(xi >= 0.0) || !(eta >= 0.0)) {
    return absl::InvalidArgumentError("learning rates must be >= 0");
  }
  if (!(fd_epsilon_scale > 0.0)) {
    return absl::InvalidArgumentError("fd_epsilon_scale must be > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<GradientVector>>
BilevelObjective::PerSampleGradWeights(const Batch& batch,
                                       const NamedTensors& arch,
                                       const NamedTensors& weights) const {
  std::vector<GradientVector> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    absl::StatusOr<GradientVector> g =
        GradWeights(batch.Example(i), arch, weights);
    if (!g.ok()) return g.status();
    out.push_back(*std::move(g));
  }
  return out;
}

absl::StatusOr<std::vector<GradientVector>> BilevelObjective::PerSampleGradArch(
    const Batch& batch, const NamedTensors& arch,
    const NamedTensors& weights) const {
  std::vector<GradientVector> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    absl::StatusOr<GradientVector> g = GradArch(batch.Example(i), arch, weights);
    if (!g.ok()) return g.status();
    out.push_back(*std::move(g));
  }
  return out;
}

absl::StatusOr<double> SupernetObjective::Loss(
    const Batch& batch, const NamedTensors& arch,
    const NamedTensors& weights) const {
  absl::StatusOr<NamedTensors> params = weights.Merge(arch);
  if (!params.ok()) return params.status();
  absl::StatusOr<ForwardResult> fwd = Forward(net_.Spec(), *params, batch);
  if (!fwd.ok()) return fwd.status();
  return fwd->loss;
}

absl::StatusOr<GradientVector> SupernetObjective::Grad(
    const Batch& batch, const NamedTensors& arch, const NamedTensors& weights,
    const std::vector<std::string>& wrt) const {
  if (absl::Status s = net_.CheckParameters(weights, arch); !s.ok()) return s;
  absl::StatusOr<NamedTensors> params = weights.Merge(arch);
  if (!params.ok()) return params.status();
  absl::StatusOr<ForwardResult> fwd = Forward(net_.Spec(), *params, batch);
  if (!fwd.ok()) return fwd.status();
  return fwd->tape.Backward(wrt);
}

absl::StatusOr<GradientVector> SupernetObjective::GradWeights(
    const Batch& batch, const NamedTensors& arch,
    const NamedTensors& weights) const {
  return Grad(batch, arch, weights, net_.weight_names());
}

absl::StatusOr<GradientVector> SupernetObjective::GradArch(
    const Batch& batch, const NamedTensors& arch,
    const NamedTensors& weights) const {
  return Grad(batch, arch, weights, net_.arch_names());
}

absl::StatusOr<NamedTensors> WeightStep(const NamedTensors& weights,
                                        const GradientVector& grad, double xi) {
  return Step(weights, grad, xi);
}

absl::StatusOr<NamedTensors> VirtualStep(const NamedTensors& weights,
                                         const GradientVector& sum_train_grads,
                                         double xi) {
  return Step(weights, sum_train_grads, xi);
}

absl::StatusOr<NamedTensors> ArchStep(const NamedTensors& arch,
                                      const GradientVector& grad, double eta) {
  return Step(arch, grad, eta);
}

absl::StatusOr<GradientVector> FiniteDifferenceCorrection(
    const BilevelObjective& objective, const Batch& train,
    const NamedTensors& arch, const NamedTensors& weights,
    const GradientVector& direction, double xi, double fd_epsilon) {
  if (!(fd_epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("finite-difference epsilon must be > 0, got ", fd_epsilon));
  }
  if (absl::Status s = weights.CheckSameLayout(direction); !s.ok()) return s;
  NamedTensors plus = weights;
  plus.AddScaled(direction, fd_epsilon);
  NamedTensors minus = weights;
  minus.AddScaled(direction, -fd_epsilon);
  absl::StatusOr<GradientVector> g_plus = objective.GradArch(train, arch, plus);
  if (!g_plus.ok()) return g_plus.status();
  absl::StatusOr<GradientVector> g_minus =
      objective.GradArch(train, arch, minus);
  if (!g_minus.ok()) return g_minus.status();
  GradientVector diff = *std::move(g_plus);
  diff.AddScaled(*g_minus, -1.0);
  diff.Scale(xi / (2.0 * fd_epsilon));
  return diff;
}

absl::StatusOr<GradientVector> ArchGradientSecondOrder(
    const BilevelObjective& objective, const Batch& train, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights,
    const NamedTensors& weights_prime, double xi, double fd_epsilon) {
  if (!(fd_epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("finite-difference epsilon must be > 0, got ", fd_epsilon));
  }
  absl::StatusOr<GradientVector> h =
      objective.GradArch(val, arch, weights_prime);
  if (!h.ok() || xi == 0.0) return h;
  absl::StatusOr<GradientVector> v =
      objective.GradWeights(val, arch, weights_prime);
  if (!v.ok()) return v.status();
  absl::StatusOr<GradientVector> correction = FiniteDifferenceCorrection(
      objective, train, arch, weights, *v, xi, fd_epsilon);
  if (!correction.ok()) return correction.status();
  h->AddScaled(*correction, -1.0);
  return h;
}

absl::StatusOr<GradientVector> ArchGradientSecondOrderRelative(
    const BilevelObjective& objective, const Batch& train, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights,
    const NamedTensors& weights_prime, const HyperParameters& hp) {
  if (absl::Status s = hp.Validate(); !s.ok()) return s;
  absl::StatusOr<GradientVector> h =
      objective.GradArch(val, arch, weights_prime);
  if (!h.ok() || hp.xi == 0.0) return h;
  absl::StatusOr<GradientVector> v =
      objective.GradWeights(val, arch, weights_prime);
  if (!v.ok()) return v.status();
  const double norm = v->L2Norm();
  if (norm < kMinDirectionNorm) return h;
  absl::StatusOr<GradientVector> correction = FiniteDifferenceCorrection(
      objective, train, arch, weights, *v, hp.xi, hp.fd_epsilon_scale / norm);
  if (!correction.ok()) return correction.status();
  h->AddScaled(*correction, -1.0);
  return h;
}

absl::StatusOr<GradientVector> ArchGradientFirstOrder(
    const BilevelObjective& objective, const Batch& val,
    const NamedTensors& arch, const NamedTensors& weights) {
  return objective.GradArch(val, arch, weights);
}

}  // namespace fnas

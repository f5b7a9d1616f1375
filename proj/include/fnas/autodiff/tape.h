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

#ifndef FNAS_AUTODIFF_TAPE_H_
#define FNAS_AUTODIFF_TAPE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"

namespace fnas {

using NodeId = std::int32_t;

enum class Primitive : std::uint8_t {
  kParameter,
  kConstant,
  kAffine,       // x[n,i] * w[i,o] + b[o]
  kRelu,
  kTanh,
  kAdd,
  kScale,        // x * constant
  kMeanPool,     // every feature of a row replaced by the row mean
  kSoftmax,      // rank-1 scores -> probabilities
  kWeightedSum,  // sum_m weights[m] * terms[m]
  kZero,         // zeros shaped like the input
  kSoftmaxCrossEntropy,
};

// Define-by-run record of primitive applications. Nodes are appended in
// evaluation order, so every input id precedes its consumer. At most one
// scalar loss node may be recorded.
class Tape {
 public:
  NodeId Parameter(const std::string& name, Tensor value);
  NodeId Constant(Tensor value);

  // Looks up a parameter leaf by name.
  absl::StatusOr<NodeId> Param(std::string_view name) const;

  absl::StatusOr<NodeId> Affine(NodeId x, NodeId w, NodeId b);
  NodeId Relu(NodeId x);
  NodeId Tanh(NodeId x);
  absl::StatusOr<NodeId> Add(NodeId a, NodeId b);
  NodeId Scale(NodeId x, double factor);
  absl::StatusOr<NodeId> MeanPool(NodeId x);
  absl::StatusOr<NodeId> Softmax(NodeId scores);
  absl::StatusOr<NodeId> WeightedSum(std::span<const NodeId> terms,
                                     NodeId weights);
  NodeId ZerosLike(NodeId x);
  // Mean cross-entropy over the rows of `logits`; becomes the tape's loss.
  absl::StatusOr<NodeId> SoftmaxCrossEntropy(NodeId logits,
                                             std::vector<int> labels);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  Primitive primitive(NodeId id) const { return nodes_[id].op; }
  std::span<const NodeId> inputs(NodeId id) const { return nodes_[id].inputs; }
  std::size_t size() const { return nodes_.size(); }
  bool has_loss() const { return loss_ >= 0; }
  NodeId loss_node() const { return loss_; }
  double loss() const { return nodes_[loss_].value[0]; }

  // Re-evaluates every recorded primitive from the stored leaves and returns
  // the recomputed loss.
  absl::StatusOr<double> Replay() const;

  // Reverse sweep from the loss node seeded with `seed`. Parameters the loss
  // does not depend on receive zero gradients.
  absl::StatusOr<GradientVector> Backward(std::span<const std::string> wrt,
                                          double seed = 1.0) const;

 private:
  struct Node {
    Primitive op;
    std::vector<NodeId> inputs;
    Tensor value;
    double factor = 0.0;      // kScale
    std::vector<int> labels;  // kSoftmaxCrossEntropy
    Tensor saved;             // kSoftmaxCrossEntropy: row probabilities
    std::string name;         // kParameter
  };

  NodeId Push(Node node);
  void Evaluate(Node& node, const std::vector<Node>& nodes) const;
  std::string Describe(NodeId id) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> params_;
  NodeId loss_ = -1;
};

// Builds logits on the tape from the input node. Parameters are fetched with
// Tape::Param so that a model only names what it uses.
using ComputationSpec =
    std::function<absl::StatusOr<NodeId>(Tape& tape, NodeId input)>;

struct ForwardResult {
  double loss = 0.0;
  Tape tape;
};

// Records every parameter as a leaf, evaluates `spec` on the batch and
// appends the mean softmax cross-entropy.
absl::StatusOr<ForwardResult> Forward(const ComputationSpec& spec,
                                      const NamedTensors& params,
                                      const Batch& batch);

absl::StatusOr<GradientVector> Backward(const ForwardResult& forward,
                                        std::span<const std::string> wrt,
                                        double seed = 1.0);

// Logits only (no loss); used for evaluation.
absl::StatusOr<Tensor> EvaluateLogits(const ComputationSpec& spec,
                                      const NamedTensors& params,
                                      const Tensor& features);

// One gradient per example, each computed by replaying the graph on that
// example alone.
absl::StatusOr<std::vector<GradientVector>> PerSampleGradients(
    const ComputationSpec& spec, const NamedTensors& params,
    const Batch& batch, std::span<const std::string> wrt);

using ScalarFunction =
    std::function<absl::StatusOr<double>(const NamedTensors& x)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every
// coordinate of every tensor in `x`.
absl::StatusOr<GradientVector> FiniteDifferenceGradient(const ScalarFunction& f,
                                                        const NamedTensors& x,
                                                        double h);

}  // namespace fnas

#endif  // FNAS_AUTODIFF_TAPE_H_

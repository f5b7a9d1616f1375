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

#ifndef FNAS_NAS_SEARCH_SPACE_H_
#define FNAS_NAS_SEARCH_SPACE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fnas/autodiff/tape.h"
#include "fnas/autodiff/tensor.h"

namespace fnas {

enum class OpKind : std::uint8_t {
  kZero,
  kIdentity,
  kDenseRelu,
  kDenseTanh,
  kDense,
  kMeanPool,
};

struct OpDescriptor {
  OpKind kind;
  std::string name;

  bool parametric() const {
    return kind == OpKind::kDenseRelu || kind == OpKind::kDenseTanh ||
           kind == OpKind::kDense;
  }
  friend bool operator==(const OpDescriptor&, const OpDescriptor&) = default;
};

// Ordered candidate operations; the position of an op is its stable index.
// All candidates map [n, d] to [n, d].
class CandidateOpSet {
 public:
  static absl::StatusOr<CandidateOpSet> Create(std::vector<OpDescriptor> ops);
  // zero, identity, dense_relu, dense_tanh, dense, mean_pool.
  static CandidateOpSet Default();

  std::size_t size() const { return ops_.size(); }
  const OpDescriptor& op(std::size_t m) const { return ops_[m]; }
  std::span<const OpDescriptor> ops() const { return ops_; }
  std::size_t zero_index() const { return zero_index_; }
  absl::StatusOr<std::size_t> IndexOf(std::string_view name) const;

 private:
  std::vector<OpDescriptor> ops_;
  std::size_t zero_index_ = 0;
};

absl::StatusOr<OpKind> OpKindFromName(std::string_view name);
std::string_view OpKindName(OpKind kind);

struct Edge {
  int from;
  int to;
};

// DAG cell. Nodes [0, num_inputs) receive the cell input; every other node
// sums its incoming edges; the last node is the output.
class CellGraph {
 public:
  // ancestors[i] lists the sources of node i; ancestors of input nodes must
  // be empty and every other node needs at least one ancestor j < i.
  static absl::StatusOr<CellGraph> Create(
      std::vector<std::vector<int>> ancestors, int num_inputs = 1);
  // num_inputs input nodes followed by `intermediate` nodes, each connected
  // to all earlier nodes.
  static absl::StatusOr<CellGraph> FullyConnected(int intermediate,
                                                  int num_inputs = 1);
  // 0 -> 1 -> ... -> length.
  static absl::StatusOr<CellGraph> Chain(int length);

  int num_nodes() const { return static_cast<int>(ancestors_.size()); }
  int num_inputs() const { return num_inputs_; }
  int output_node() const { return num_nodes() - 1; }
  std::span<const int> ancestors(int node) const { return ancestors_[node]; }
  // Edges ordered by (to, from); the position is the edge id.
  std::span<const Edge> edges() const { return edges_; }

 private:
  std::vector<std::vector<int>> ancestors_;
  std::vector<Edge> edges_;
  int num_inputs_ = 1;
};

std::string EdgeKey(const Edge& e);               // "edge0_1"
std::string ArchKey(const Edge& e);               // "arch/edge0_1"
std::string OpWeightKey(const Edge& e, const OpDescriptor& op);  // ".../w"
std::string OpBiasKey(const Edge& e, const OpDescriptor& op);    // ".../b"
inline constexpr char kHeadWeight[] = "head/w";
inline constexpr char kHeadBias[] = "head/b";

// Uniform(-s, s) with s = 1 / sqrt(fan_in); each tensor draws from a stream
// keyed by (seed, hash of its name), so initialization does not depend on
// which other tensors exist.
Tensor InitUniform(const std::string& name, const Shape& shape,
                   std::size_t fan_in, std::uint64_t seed);

// softmax(a)-weighted sum of every candidate applied to x. `edge_key` prefixes
// the parametric ops' weight names.
absl::StatusOr<NodeId> MixedEdge(Tape& tape, NodeId x,
                                 const CandidateOpSet& ops, NodeId scores,
                                 const Edge& edge);

// Applies a single candidate op on the tape.
absl::StatusOr<NodeId> ApplyOp(Tape& tape, NodeId x, const OpDescriptor& op,
                               const Edge& edge);

// Stand-alone evaluation of one mixed edge on concrete values.
absl::StatusOr<Tensor> MixedEdgeForward(const Tensor& x,
                                        const CandidateOpSet& ops,
                                        const Tensor& scores,
                                        const NamedTensors& weights,
                                        const Edge& edge);

// The over-parameterized network: one mixed op per cell edge followed by a
// dense classifier head on the output node. Parameters are split into
// weights W (ops and head) and architecture variables A (one score vector of
// length M per edge); the computation spec reads both from one collection.
class Supernet {
 public:
  Supernet(CellGraph cell, CandidateOpSet ops, std::size_t input_dim,
           std::size_t num_classes);

  const CellGraph& cell() const { return cell_; }
  const CandidateOpSet& ops() const { return ops_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }

  NamedTensors InitWeights(std::uint64_t seed) const;
  // All-zero scores: the uniform mixture.
  NamedTensors InitArch() const;

  const std::vector<std::string>& weight_names() const { return weight_names_; }
  const std::vector<std::string>& arch_names() const { return arch_names_; }

  ComputationSpec Spec() const;

  // Checks both collections against the expected layout.
  absl::Status CheckParameters(const NamedTensors& weights,
                               const NamedTensors& arch) const;

  absl::StatusOr<Tensor> Logits(const Tensor& features,
                                const NamedTensors& weights,
                                const NamedTensors& arch) const;

 private:
  CellGraph cell_;
  CandidateOpSet ops_;
  std::size_t input_dim_;
  std::size_t num_classes_;
  NamedTensors weight_layout_;
  std::vector<std::string> weight_names_;
  std::vector<std::string> arch_names_;
};

// Softmax mixing weights of one edge's scores.
std::vector<double> MixingWeights(std::span<const double> scores);

// Per edge, the retained op indices in descending score order.
struct DiscreteArchitecture {
  int top_k = 1;
  std::vector<std::vector<std::size_t>> retained;

  friend bool operator==(const DiscreteArchitecture&,
                         const DiscreteArchitecture&) = default;
};

// Keeps the top_k highest-scoring non-zero ops of each edge; ties go to the
// lower op index.
absl::StatusOr<DiscreteArchitecture> Discretize(const NamedTensors& arch,
                                                const CellGraph& cell,
                                                const CandidateOpSet& ops,
                                                int top_k);

// One line per edge: "edge j->i: [op, op]".
std::string ArchitectureToText(const DiscreteArchitecture& arch,
                               const CellGraph& cell,
                               const CandidateOpSet& ops);
absl::StatusOr<DiscreteArchitecture> ArchitectureFromText(
    std::string_view text, const CellGraph& cell, const CandidateOpSet& ops);

// Plain network with only the retained ops. An edge with several retained
// ops outputs their average, which is what the supernet computes when the
// retained scores are equal and saturated.
class DiscreteNetwork {
 public:
  DiscreteNetwork(CellGraph cell, CandidateOpSet ops, DiscreteArchitecture arch,
                  std::size_t input_dim, std::size_t num_classes);

  const DiscreteArchitecture& architecture() const { return arch_; }
  const std::vector<std::string>& weight_names() const { return weight_names_; }
  NamedTensors InitWeights(std::uint64_t seed) const;
  ComputationSpec Spec() const;
  absl::StatusOr<Tensor> Logits(const Tensor& features,
                                const NamedTensors& weights) const;

 private:
  CellGraph cell_;
  CandidateOpSet ops_;
  DiscreteArchitecture arch_;
  std::size_t input_dim_;
  std::size_t num_classes_;
  NamedTensors weight_layout_;
  std::vector<std::string> weight_names_;
};

struct MaterializedNetwork {
  DiscreteNetwork network;
  NamedTensors weights;
};

absl::StatusOr<MaterializedNetwork> Materialize(const DiscreteArchitecture& arch,
                                                const CellGraph& cell,
                                                const CandidateOpSet& ops,
                                                std::size_t input_dim,
                                                std::size_t num_classes,
                                                std::uint64_t init_seed);

// Fraction of rows whose argmax logit differs from the label.
double ClassificationError(const Tensor& logits, std::span<const int> labels);

}  // namespace fnas

#endif  // FNAS_NAS_SEARCH_SPACE_H_

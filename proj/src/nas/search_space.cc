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

#include "fnas/nas/search_space.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "fnas/dp/rng.h"

namespace fnas {
namespace {

struct KindName {
  OpKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {OpKind::kZero, "zero"},           {OpKind::kIdentity, "identity"},
    {OpKind::kDenseRelu, "dense_relu"}, {OpKind::kDenseTanh, "dense_tanh"},
    {OpKind::kDense, "dense"},         {OpKind::kMeanPool, "mean_pool"},
};

absl::StatusOr<NodeId> BuildCell(Tape& tape, NodeId input,
                                 const CellGraph& cell,
                                 const std::function<absl::StatusOr<NodeId>(
                                     NodeId, std::size_t)>& edge_fn) {
  std::vector<NodeId> node_values(cell.num_nodes(), -1);
  for (int i = 0; i < cell.num_inputs(); ++i) node_values[i] = input;
  std::size_t e = 0;
  const auto edges = cell.edges();
  for (int i = cell.num_inputs(); i < cell.num_nodes(); ++i) {
    NodeId acc = -1;
    for (; e < edges.size() && edges[e].to == i; ++e) {
      absl::StatusOr<NodeId> out = edge_fn(node_values[edges[e].from], e);
      if (!out.ok()) return out.status();
      if (acc < 0) {
        acc = *out;
      } else {
        absl::StatusOr<NodeId> sum = tape.Add(acc, *out);
        if (!sum.ok()) return sum.status();
        acc = *sum;
      }
    }
    node_values[i] = acc;
  }
  return node_values[cell.output_node()];
}

absl::StatusOr<NodeId> ApplyHead(Tape& tape, NodeId x) {
  absl::StatusOr<NodeId> w = tape.Param(kHeadWeight);
  if (!w.ok()) return w.status();
  absl::StatusOr<NodeId> b = tape.Param(kHeadBias);
  if (!b.ok()) return b.status();
  return tape.Affine(x, *w, *b);
}

void AddOpLayout(const Edge& edge, const OpDescriptor& op, std::size_t d,
                 NamedTensors& layout) {
  if (!op.parametric()) return;
  layout.Set(OpWeightKey(edge, op), Tensor::Zeros({d, d}));
  layout.Set(OpBiasKey(edge, op), Tensor::Zeros({d}));
}

void AddHeadLayout(std::size_t d, std::size_t classes, NamedTensors& layout) {
  layout.Set(kHeadWeight, Tensor::Zeros({d, classes}));
  layout.Set(kHeadBias, Tensor::Zeros({classes}));
}

NamedTensors InitFromLayout(const NamedTensors& layout, std::size_t fan_in,
                            std::uint64_t seed) {
  // Every weight is [d, out]; biases share the fan-in of their weight.
  NamedTensors out;
  for (const auto& [name, t] : layout) {
    out.Set(name, InitUniform(name, t.shape(), fan_in, seed));
  }
  return out;
}

}  // namespace

absl::StatusOr<OpKind> OpKindFromName(std::string_view name) {
  for (const KindName& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown op '", std::string(name), "'"));
}

std::string_view OpKindName(OpKind kind) {
  for (const KindName& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

absl::StatusOr<CandidateOpSet> CandidateOpSet::Create(
    std::vector<OpDescriptor> ops) {
  if (ops.size() < 2) {
    return absl::InvalidArgumentError("candidate set needs at least 2 ops");
  }
  int zeros = 0, identities = 0;
  std::size_t zero_index = 0;
  for (std::size_t m = 0; m < ops.size(); ++m) {
    if (ops[m].kind == OpKind::kZero) {
      ++zeros;
      zero_index = m;
    }
    if (ops[m].kind == OpKind::kIdentity) ++identities;
    for (std::size_t l = 0; l < m; ++l) {
      if (ops[l].name == ops[m].name) {
        return absl::InvalidArgumentError(
            absl::StrCat("duplicate op name '", ops[m].name, "'"));
      }
    }
  }
  if (zeros != 1 || identities != 1) {
    return absl::InvalidArgumentError(
        "candidate set needs exactly one zero and one identity op");
  }
  CandidateOpSet set;
  set.ops_ = std::move(ops);
  set.zero_index_ = zero_index;
  return set;
}

CandidateOpSet CandidateOpSet::Default() {
  std::vector<OpDescriptor> ops;
  for (const KindName& kn : kKindNames) {
    ops.push_back({kn.kind, std::string(kn.name)});
  }
  return *Create(std::move(ops));
}

absl::StatusOr<std::size_t> CandidateOpSet::IndexOf(
    std::string_view name) const {
  for (std::size_t m = 0; m < ops_.size(); ++m) {
    if (ops_[m].name == name) return m;
  }
  return absl::NotFoundError(absl::StrCat("op '", std::string(name), "' not in candidate set"));
}

absl::StatusOr<CellGraph> CellGraph::Create(
    std::vector<std::vector<int>> ancestors, int num_inputs) {
  const int n = static_cast<int>(ancestors.size());
  if (num_inputs < 1 || num_inputs > 2) {
    return absl::InvalidArgumentError("a cell has one or two input nodes");
  }
  if (n <= num_inputs) {
    return absl::InvalidArgumentError("a cell needs a non-input output node");
  }
  CellGraph cell;
  cell.num_inputs_ = num_inputs;
  for (int i = 0; i < n; ++i) {
    std::vector<int>& p = ancestors[i];
    std::sort(p.begin(), p.end());
    if (std::adjacent_find(p.begin(), p.end()) != p.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", i, " lists an ancestor twice"));
    }
    if (i < num_inputs) {
      if (!p.empty()) {
        return absl::InvalidArgumentError(
            absl::StrCat("input node ", i, " cannot have ancestors"));
      }
      continue;
    }
    if (p.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", i, " has no ancestors"));
    }
    for (int j : p) {
      if (j < 0 || j >= i) {
        return absl::InvalidArgumentError(absl::StrCat(
            "ancestor ", j, " of node ", i, " violates topological order"));
      }
      cell.edges_.push_back(Edge{j, i});
    }
  }
  cell.ancestors_ = std::move(ancestors);
  return cell;
}

absl::StatusOr<CellGraph> CellGraph::FullyConnected(int intermediate,
                                                    int num_inputs) {
  if (intermediate < 1) {
    return absl::InvalidArgumentError("need at least one intermediate node");
  }
  std::vector<std::vector<int>> ancestors(num_inputs + intermediate);
  for (int i = num_inputs; i < num_inputs + intermediate; ++i) {
    for (int j = 0; j < i; ++j) ancestors[i].push_back(j);
  }
  return Create(std::move(ancestors), num_inputs);
}

absl::StatusOr<CellGraph> CellGraph::Chain(int length) {
  if (length < 1) return absl::InvalidArgumentError("chain length must be >= 1");
  std::vector<std::vector<int>> ancestors(length + 1);
  for (int i = 1; i <= length; ++i) ancestors[i] = {i - 1};
  return Create(std::move(ancestors), 1);
}

std::string EdgeKey(const Edge& e) { return absl::StrCat("edge", e.from, "_", e.to); }
std::string ArchKey(const Edge& e) { return absl::StrCat("arch/", EdgeKey(e)); }
std::string OpWeightKey(const Edge& e, const OpDescriptor& op) {
  return absl::StrCat(EdgeKey(e), "/", op.name, "/w");
}
std::string OpBiasKey(const Edge& e, const OpDescriptor& op) {
  return absl::StrCat(EdgeKey(e), "/", op.name, "/b");
}

Tensor InitUniform(const std::string& name, const Shape& shape,
                   std::size_t fan_in, std::uint64_t seed) {
  const double s = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 1.0;
  RngStream rng(seed, 0, StableHash(name), StreamPhase::kInit);
  std::vector<double> values(ShapeSize(shape));
  for (double& v : values) v = s * (2.0 * rng.NextUniform() - 1.0);
  return Tensor::FromValues(shape, std::move(values));
}

absl::StatusOr<NodeId> ApplyOp(Tape& tape, NodeId x, const OpDescriptor& op,
                               const Edge& edge) {
  switch (op.kind) {
    case OpKind::kZero:
      return tape.ZerosLike(x);
    case OpKind::kIdentity:
      return x;
    case OpKind::kMeanPool:
      return tape.MeanPool(x);
    case OpKind::kDenseRelu:
    case OpKind::kDenseTanh:
    case OpKind::kDense: {
      absl::StatusOr<NodeId> w = tape.Param(OpWeightKey(edge, op));
      if (!w.ok()) return w.status();
      absl::StatusOr<NodeId> b = tape.Param(OpBiasKey(edge, op));
      if (!b.ok()) return b.status();
      absl::StatusOr<NodeId> y = tape.Affine(x, *w, *b);
      if (!y.ok()) return y.status();
      if (!tape.value(*y).SameShape(tape.value(x))) {
        return absl::InvalidArgumentError(absl::StrCat(
            "op '", op.name, "' on ", EdgeKey(edge), " maps ",
            ShapeToString(tape.value(x).shape()), " to ",
            ShapeToString(tape.value(*y).shape()),
            "; candidates must preserve the feature dimension"));
      }
      if (op.kind == OpKind::kDenseRelu) return tape.Relu(*y);
      if (op.kind == OpKind::kDenseTanh) return tape.Tanh(*y);
      return *y;
    }
  }
  return absl::InternalError("unhandled op kind");
}

absl::StatusOr<NodeId> MixedEdge(Tape& tape, NodeId x,
                                 const CandidateOpSet& ops, NodeId scores,
                                 const Edge& edge) {
  if (tape.value(scores).size() != ops.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(EdgeKey(edge), " has ", tape.value(scores).size(),
                     " scores for ", ops.size(), " candidate ops"));
  }
  absl::StatusOr<NodeId> mix = tape.Softmax(scores);
  if (!mix.ok()) return mix.status();
  std::vector<NodeId> terms;
  terms.reserve(ops.size());
  for (const OpDescriptor& op : ops.ops()) {
    absl::StatusOr<NodeId> t = ApplyOp(tape, x, op, edge);
    if (!t.ok()) return t.status();
    terms.push_back(*t);
  }
  return tape.WeightedSum(terms, *mix);
}

absl::StatusOr<Tensor> MixedEdgeForward(const Tensor& x,
                                        const CandidateOpSet& ops,
                                        const Tensor& scores,
                                        const NamedTensors& weights,
                                        const Edge& edge) {
  Tape tape;
  for (const auto& [name, value] : weights) tape.Parameter(name, value);
  const NodeId xin = tape.Constant(x);
  const NodeId a = tape.Constant(scores);
  absl::StatusOr<NodeId> out = MixedEdge(tape, xin, ops, a, edge);
  if (!out.ok()) return out.status();
  return tape.value(*out);
}

std::vector<double> MixingWeights(std::span<const double> scores) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : scores) mx = std::max(mx, v);
  std::vector<double> w(scores.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(scores[i] - mx);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

Supernet::Supernet(CellGraph cell, CandidateOpSet ops, std::size_t input_dim,
                   std::size_t num_classes)
    : cell_(std::move(cell)),
      ops_(std::move(ops)),
      input_dim_(input_dim),
      num_classes_(num_classes) {
  for (const Edge& e : cell_.edges()) {
    for (const OpDescriptor& op : ops_.ops()) {
      AddOpLayout(e, op, input_dim_, weight_layout_);
    }
    arch_names_.push_back(ArchKey(e));
  }
  AddHeadLayout(input_dim_, num_classes_, weight_layout_);
  weight_names_ = weight_layout_.Names();
  std::sort(arch_names_.begin(), arch_names_.end());
}

NamedTensors Supernet::InitWeights(std::uint64_t seed) const {
  return InitFromLayout(weight_layout_, input_dim_, seed);
}

NamedTensors Supernet::InitArch() const {
  NamedTensors arch;
  for (const Edge& e : cell_.edges()) {
    arch.Set(ArchKey(e), Tensor::Zeros({ops_.size()}));
  }
  return arch;
}

ComputationSpec Supernet::Spec() const {
  // Captures copies of the graph and op set so the spec may outlive *this.
  return [cell = cell_, ops = ops_](Tape& tape,
                                    NodeId input) -> absl::StatusOr<NodeId> {
    absl::StatusOr<NodeId> out = BuildCell(
        tape, input, cell,
        [&](NodeId x, std::size_t id) -> absl::StatusOr<NodeId> {
          const Edge& e = cell.edges()[id];
          absl::StatusOr<NodeId> scores = tape.Param(ArchKey(e));
          if (!scores.ok()) return scores.status();
          return MixedEdge(tape, x, ops, *scores, e);
        });
    if (!out.ok()) return out.status();
    return ApplyHead(tape, *out);
  };
}

absl::Status Supernet::CheckParameters(const NamedTensors& weights,
                                       const NamedTensors& arch) const {
  if (absl::Status s = weight_layout_.CheckSameLayout(weights); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("weight parameters: ", s.message()));
  }
  if (absl::Status s = InitArch().CheckSameLayout(arch); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("architecture variables: ", s.message()));
  }
  return absl::OkStatus();
}

absl::StatusOr<Tensor> Supernet::Logits(const Tensor& features,
                                        const NamedTensors& weights,
                                        const NamedTensors& arch) const {
  absl::StatusOr<NamedTensors> params = weights.Merge(arch);
  if (!params.ok()) return params.status();
  return EvaluateLogits(Spec(), *params, features);
}

absl::StatusOr<DiscreteArchitecture> Discretize(const NamedTensors& arch,
                                                const CellGraph& cell,
                                                const CandidateOpSet& ops,
                                                int top_k) {
  const int m = static_cast<int>(ops.size());
  if (top_k < 1 || top_k > m - 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("topK must lie in [1, ", m - 1, "], got ", top_k));
  }
  DiscreteArchitecture out;
  out.top_k = top_k;
  for (const Edge& e : cell.edges()) {
    const Tensor* scores = arch.Find(ArchKey(e));
    if (scores == nullptr || scores->size() != ops.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("missing or malformed scores for ", EdgeKey(e)));
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (i != ops.zero_index()) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return (*scores)[a] > (*scores)[b];
                     });
    order.resize(top_k);
    out.retained.push_back(std::move(order));
  }
  return out;
}

std::string ArchitectureToText(const DiscreteArchitecture& arch,
                               const CellGraph& cell,
                               const CandidateOpSet& ops) {
  std::string text;
  const auto edges = cell.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    std::vector<std::string> names;
    for (std::size_t m : arch.retained[e]) names.push_back(ops.op(m).name);
    absl::StrAppend(&text, "edge ", edges[e].from, "->", edges[e].to, ": [",
                    absl::StrJoin(names, ", "), "]\n");
  }
  return text;
}

absl::StatusOr<DiscreteArchitecture> ArchitectureFromText(
    std::string_view text_in, const CellGraph& cell, const CandidateOpSet& ops) {
  const absl::string_view text(text_in.data(), text_in.size());
  DiscreteArchitecture arch;
  arch.top_k = 0;
  const auto edges = cell.edges();
  std::size_t e = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n', absl::SkipEmpty())) {
    if (e >= edges.size()) {
      return absl::InvalidArgumentError("more architecture lines than edges");
    }
    absl::string_view rest = line;
    if (!absl::ConsumePrefix(&rest, "edge ")) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed architecture line '", line, "'"));
    }
    std::pair<absl::string_view, absl::string_view> head_ops =
        absl::StrSplit(rest, absl::MaxSplits(": ", 1));
    std::pair<absl::string_view, absl::string_view> ends =
        absl::StrSplit(head_ops.first, absl::MaxSplits("->", 1));
    int from = -1, to = -1;
    if (!absl::SimpleAtoi(ends.first, &from) ||
        !absl::SimpleAtoi(ends.second, &to) || from != edges[e].from ||
        to != edges[e].to) {
      return absl::InvalidArgumentError(absl::StrCat(
          "architecture line '", line, "' does not match cell edge ",
          EdgeKey(edges[e])));
    }
    absl::string_view list = head_ops.second;
    if (!absl::ConsumePrefix(&list, "[") || !absl::ConsumeSuffix(&list, "]")) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed op list in '", line, "'"));
    }
    std::vector<std::size_t> retained;
    for (absl::string_view name : absl::StrSplit(list, ", ", absl::SkipEmpty())) {
      absl::StatusOr<std::size_t> m = ops.IndexOf(std::string_view(name.data(), name.size()));
      if (!m.ok()) return m.status();
      if (*m == ops.zero_index()) {
        return absl::InvalidArgumentError("the zero op cannot be retained");
      }
      retained.push_back(*m);
    }
    if (retained.empty() ||
        (arch.top_k != 0 && static_cast<int>(retained.size()) != arch.top_k)) {
      return absl::InvalidArgumentError(
          absl::StrCat("inconsistent op count on line '", line, "'"));
    }
    arch.top_k = static_cast<int>(retained.size());
    arch.retained.push_back(std::move(retained));
    ++e;
  }
  if (e != edges.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "architecture lists ", e, " edges, cell has ", edges.size()));
  }
  return arch;
}

DiscreteNetwork::DiscreteNetwork(CellGraph cell, CandidateOpSet ops,
                                 DiscreteArchitecture arch,
                                 std::size_t input_dim, std::size_t num_classes)
    : cell_(std::move(cell)),
      ops_(std::move(ops)),
      arch_(std::move(arch)),
      input_dim_(input_dim),
      num_classes_(num_classes) {
  const auto edges = cell_.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::size_t m : arch_.retained[e]) {
      AddOpLayout(edges[e], ops_.op(m), input_dim_, weight_layout_);
    }
  }
  AddHeadLayout(input_dim_, num_classes_, weight_layout_);
  weight_names_ = weight_layout_.Names();
}

NamedTensors DiscreteNetwork::InitWeights(std::uint64_t seed) const {
  return InitFromLayout(weight_layout_, input_dim_, seed);
}

ComputationSpec DiscreteNetwork::Spec() const {
  return [cell = cell_, ops = ops_, arch = arch_](
             Tape& tape, NodeId input) -> absl::StatusOr<NodeId> {
    absl::StatusOr<NodeId> out = BuildCell(
        tape, input, cell,
        [&](NodeId x, std::size_t id) -> absl::StatusOr<NodeId> {
          const Edge& e = cell.edges()[id];
          const std::vector<std::size_t>& keep = arch.retained[id];
          NodeId acc = -1;
          for (std::size_t m : keep) {
            absl::StatusOr<NodeId> y = ApplyOp(tape, x, ops.op(m), e);
            if (!y.ok()) return y.status();
            if (acc < 0) {
              acc = *y;
            } else {
              absl::StatusOr<NodeId> sum = tape.Add(acc, *y);
              if (!sum.ok()) return sum.status();
              acc = *sum;
            }
          }
          if (keep.size() > 1) {
            acc = tape.Scale(acc, 1.0 / static_cast<double>(keep.size()));
          }
          return acc;
        });
    if (!out.ok()) return out.status();
    return ApplyHead(tape, *out);
  };
}

absl::StatusOr<Tensor> DiscreteNetwork::Logits(
    const Tensor& features, const NamedTensors& weights) const {
  return EvaluateLogits(Spec(), weights, features);
}

absl::StatusOr<MaterializedNetwork> Materialize(const DiscreteArchitecture& arch,
                                                const CellGraph& cell,
                                                const CandidateOpSet& ops,
                                                std::size_t input_dim,
                                                std::size_t num_classes,
                                                std::uint64_t init_seed) {
  if (arch.retained.size() != cell.edges().size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("architecture has ", arch.retained.size(),
                     " edges, cell has ", cell.edges().size()));
  }
  for (const auto& keep : arch.retained) {
    if (keep.empty() || static_cast<int>(keep.size()) != arch.top_k) {
      return absl::InvalidArgumentError("edge retains the wrong op count");
    }
    for (std::size_t m : keep) {
      if (m >= ops.size() || m == ops.zero_index()) {
        return absl::InvalidArgumentError("invalid retained op index");
      }
    }
  }
  DiscreteNetwork net(cell, ops, arch, input_dim, num_classes);
  NamedTensors weights = net.InitWeights(init_seed);
  return MaterializedNetwork{std::move(net), std::move(weights)};
}

double ClassificationError(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (n == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (logits.at(r, j) > logits.at(r, best)) best = j;
    }
    if (static_cast<int>(best) != labels[r]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

}  // namespace fnas

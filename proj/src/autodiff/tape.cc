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

#include "fnas/autodiff/tape.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"

namespace fnas {
namespace {

void AffineKernel(const Tensor& x, const Tensor& w, const Tensor& b,
                  std::vector<double>& out) {
  const std::size_t n = x.dim(0), in = x.dim(1), o = w.dim(1);
  out.assign(n * o, 0.0);
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  const double* bv = b.values().data();
  for (std::size_t r = 0; r < n; ++r) {
    double* row = out.data() + r * o;
    for (std::size_t c = 0; c < o; ++c) row[c] = bv[c];
    for (std::size_t k = 0; k < in; ++k) {
      const double xk = xv[r * in + k];
      const double* wk = wv + k * o;
      for (std::size_t c = 0; c < o; ++c) row[c] += xk * wk[c];
    }
  }
}

}  // namespace

NodeId Tape::Push(Node node) {
  Evaluate(node, nodes_);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::string Tape::Describe(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.op == Primitive::kParameter) {
    return absl::StrCat("parameter '", n.name, "' ",
                        ShapeToString(n.value.shape()));
  }
  return absl::StrCat("node ", id, " ", ShapeToString(n.value.shape()));
}

NodeId Tape::Parameter(const std::string& name, Tensor value) {
  Node node{.op = Primitive::kParameter, .value = std::move(value)};
  node.name = name;
  nodes_.push_back(std::move(node));
  const NodeId id = static_cast<NodeId>(nodes_.size() - 1);
  params_[name] = id;
  return id;
}

NodeId Tape::Constant(Tensor value) {
  nodes_.push_back(Node{.op = Primitive::kConstant, .value = std::move(value)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

absl::StatusOr<NodeId> Tape::Param(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    return absl::NotFoundError(absl::StrCat("missing parameter '", std::string(name), "'"));
  }
  return it->second;
}

absl::StatusOr<NodeId> Tape::Affine(NodeId x, NodeId w, NodeId b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 ||
      xv.dim(1) != wv.dim(0) || bv.dim(0) != wv.dim(1)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "affine shape mismatch: input ", Describe(x), ", weight ",
        Describe(w), ", bias ", Describe(b)));
  }
  return Push(Node{.op = Primitive::kAffine, .inputs = {x, w, b}});
}

NodeId Tape::Relu(NodeId x) {
  return Push(Node{.op = Primitive::kRelu, .inputs = {x}});
}

NodeId Tape::Tanh(NodeId x) {
  return Push(Node{.op = Primitive::kTanh, .inputs = {x}});
}

absl::StatusOr<NodeId> Tape::Add(NodeId a, NodeId b) {
  if (!value(a).SameShape(value(b))) {
    return absl::InvalidArgumentError(
        absl::StrCat("add shape mismatch: ", Describe(a), " vs ", Describe(b)));
  }
  return Push(Node{.op = Primitive::kAdd, .inputs = {a, b}});
}

NodeId Tape::Scale(NodeId x, double factor) {
  return Push(Node{.op = Primitive::kScale, .inputs = {x}, .factor = factor});
}

absl::StatusOr<NodeId> Tape::MeanPool(NodeId x) {
  if (value(x).rank() != 2 || value(x).dim(1) == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("mean-pool needs a nonempty [n, d] input, got ",
                     Describe(x)));
  }
  return Push(Node{.op = Primitive::kMeanPool, .inputs = {x}});
}

absl::StatusOr<NodeId> Tape::Softmax(NodeId scores) {
  if (value(scores).rank() != 1 || value(scores).size() == 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "softmax needs a nonempty rank-1 input, got ", Describe(scores)));
  }
  return Push(Node{.op = Primitive::kSoftmax, .inputs = {scores}});
}

absl::StatusOr<NodeId> Tape::WeightedSum(std::span<const NodeId> terms,
                                         NodeId weights) {
  const Tensor& w = value(weights);
  if (terms.empty() || w.rank() != 1 || w.size() != terms.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("weighted sum of ", terms.size(), " terms needs ",
                     terms.size(), " weights, got ", Describe(weights)));
  }
  for (NodeId t : terms) {
    if (!value(t).SameShape(value(terms[0]))) {
      return absl::InvalidArgumentError(
          absl::StrCat("weighted sum term ", Describe(t),
                       " does not match ", Describe(terms[0])));
    }
  }
  Node node{.op = Primitive::kWeightedSum};
  node.inputs.assign(terms.begin(), terms.end());
  node.inputs.push_back(weights);
  return Push(std::move(node));
}

NodeId Tape::ZerosLike(NodeId x) {
  return Push(Node{.op = Primitive::kZero, .inputs = {x}});
}

absl::StatusOr<NodeId> Tape::SoftmaxCrossEntropy(NodeId logits,
                                                 std::vector<int> labels) {
  if (loss_ >= 0) {
    return absl::FailedPreconditionError("tape already has a loss node");
  }
  const Tensor& z = value(logits);
  if (z.rank() != 2 || z.dim(0) != labels.size() || z.dim(0) == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("cross-entropy needs [n, C] logits for ", labels.size(),
                     " labels, got ", Describe(logits)));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= z.dim(1)) {
      return absl::InvalidArgumentError(
          absl::StrCat("label ", y, " outside [0, ", z.dim(1), ")"));
    }
  }
  Node node{.op = Primitive::kSoftmaxCrossEntropy, .inputs = {logits}};
  node.labels = std::move(labels);
  loss_ = Push(std::move(node));
  return loss_;
}

void Tape::Evaluate(Node& node, const std::vector<Node>& nodes) const {
  auto in = [&](std::size_t k) -> const Tensor& {
    return nodes[node.inputs[k]].value;
  };
  switch (node.op) {
    case Primitive::kParameter:
    case Primitive::kConstant:
      return;
    case Primitive::kAffine: {
      std::vector<double> out;
      AffineKernel(in(0), in(1), in(2), out);
      node.value =
          Tensor::FromValues({in(0).dim(0), in(1).dim(1)}, std::move(out));
      return;
    }
    case Primitive::kRelu: {
      std::vector<double> out(in(0).data());
      for (double& v : out) v = v > 0.0 ? v : 0.0;
      node.value = Tensor::FromValues(in(0).shape(), std::move(out));
      return;
    }
    case Primitive::kTanh: {
      std::vector<double> out(in(0).data());
      for (double& v : out) v = std::tanh(v);
      node.value = Tensor::FromValues(in(0).shape(), std::move(out));
      return;
    }
    case Primitive::kAdd: {
      std::vector<double> out(in(0).data());
      auto b = in(1).values();
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      node.value = Tensor::FromValues(in(0).shape(), std::move(out));
      return;
    }
    case Primitive::kScale: {
      std::vector<double> out(in(0).data());
      for (double& v : out) v *= node.factor;
      node.value = Tensor::FromValues(in(0).shape(), std::move(out));
      return;
    }
    case Primitive::kMeanPool: {
      const Tensor& x = in(0);
      const std::size_t n = x.dim(0), d = x.dim(1);
      std::vector<double> out(n * d);
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += x.at(r, c);
        const double mean = s / static_cast<double>(d);
        for (std::size_t c = 0; c < d; ++c) out[r * d + c] = mean;
      }
      node.value = Tensor::FromValues(x.shape(), std::move(out));
      return;
    }
    case Primitive::kSoftmax: {
      const Tensor& z = in(0);
      double mx = -std::numeric_limits<double>::infinity();
      for (double v : z.values()) mx = std::max(mx, v);
      std::vector<double> out(z.size());
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        s += out[i];
      }
      for (double& v : out) v /= s;
      node.value = Tensor::FromValues(z.shape(), std::move(out));
      return;
    }
    case Primitive::kWeightedSum: {
      const std::size_t m = node.inputs.size() - 1;
      const Tensor& w = in(m);
      std::vector<double> out(in(0).size(), 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        if (nodes[node.inputs[k]].op == Primitive::kZero) continue;
        const double wk = w[k];
        auto t = in(k).values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += wk * t[i];
      }
      node.value = Tensor::FromValues(in(0).shape(), std::move(out));
      return;
    }
    case Primitive::kZero:
      node.value = Tensor::Zeros(in(0).shape());
      return;
    case Primitive::kSoftmaxCrossEntropy: {
      const Tensor& z = in(0);
      const std::size_t n = z.dim(0), c = z.dim(1);
      std::vector<double> probs(n * c);
      double total = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, z.at(r, j));
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          probs[r * c + j] = std::exp(z.at(r, j) - mx);
          s += probs[r * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) probs[r * c + j] /= s;
        const std::size_t y = static_cast<std::size_t>(node.labels[r]);
        total += -(z.at(r, y) - mx - std::log(s));
      }
      node.saved = Tensor::FromValues(z.shape(), std::move(probs));
      node.value = Tensor::Scalar(total / static_cast<double>(n));
      return;
    }
  }
}

absl::StatusOr<double> Tape::Replay() const {
  if (loss_ < 0) return absl::FailedPreconditionError("tape has no loss node");
  std::vector<Node> replay = nodes_;
  for (Node& node : replay) Evaluate(node, replay);
  return replay[loss_].value[0];
}

absl::StatusOr<GradientVector> Tape::Backward(std::span<const std::string> wrt,
                                              double seed) const {
  if (loss_ < 0) return absl::FailedPreconditionError("tape has no loss node");
  std::vector<NodeId> targets;
  targets.reserve(wrt.size());
  for (const std::string& name : wrt) {
    auto it = params_.find(name);
    if (it == params_.end()) {
      return absl::NotFoundError(
          absl::StrCat("gradient requested for unknown parameter '", name,
                       "'"));
    }
    targets.push_back(it->second);
  }

  std::vector<std::vector<double>> grads(nodes_.size());
  auto grad_of = [&](NodeId id) -> std::vector<double>& {
    auto& g = grads[id];
    if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
    return g;
  };
  // The sweep runs with a unit seed and the result is scaled once at the
  // end, so the output is linear in `seed` up to a single rounding.
  grad_of(loss_)[0] = 1.0;

  for (NodeId id = loss_; id >= 0; --id) {
    if (grads[id].empty()) continue;
    const Node& node = nodes_[id];
    const std::vector<double>& dy = grads[id];
    switch (node.op) {
      case Primitive::kParameter:
      case Primitive::kConstant:
      case Primitive::kZero:
        break;
      case Primitive::kAffine: {
        const Tensor& x = value(node.inputs[0]);
        const Tensor& w = value(node.inputs[1]);
        const std::size_t n = x.dim(0), in = x.dim(1), o = w.dim(1);
        if (nodes_[node.inputs[0]].op != Primitive::kConstant) {
          auto& dx = grad_of(node.inputs[0]);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < in; ++k) {
              double s = 0.0;
              for (std::size_t c = 0; c < o; ++c) {
                s += dy[r * o + c] * w.at(k, c);
              }
              dx[r * in + k] += s;
            }
          }
        }
        auto& dw = grad_of(node.inputs[1]);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t k = 0; k < in; ++k) {
            const double xk = x.at(r, k);
            for (std::size_t c = 0; c < o; ++c) {
              dw[k * o + c] += xk * dy[r * o + c];
            }
          }
        }
        auto& db = grad_of(node.inputs[2]);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < o; ++c) db[c] += dy[r * o + c];
        }
        break;
      }
      case Primitive::kRelu: {
        const Tensor& x = value(node.inputs[0]);
        auto& dx = grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          if (x[i] > 0.0) dx[i] += dy[i];
        }
        break;
      }
      case Primitive::kTanh: {
        auto& dx = grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          const double t = node.value[i];
          dx[i] += dy[i] * (1.0 - t * t);
        }
        break;
      }
      case Primitive::kAdd: {
        for (NodeId in : node.inputs) {
          auto& dx = grad_of(in);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        }
        break;
      }
      case Primitive::kScale: {
        auto& dx = grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += node.factor * dy[i];
        break;
      }
      case Primitive::kMeanPool: {
        const std::size_t n = node.value.dim(0), d = node.value.dim(1);
        auto& dx = grad_of(node.inputs[0]);
        for (std::size_t r = 0; r < n; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < d; ++c) s += dy[r * d + c];
          const double share = s / static_cast<double>(d);
          for (std::size_t c = 0; c < d; ++c) dx[r * d + c] += share;
        }
        break;
      }
      case Primitive::kSoftmax: {
        const Tensor& s = node.value;
        double dot = 0.0;
        for (std::size_t i = 0; i < dy.size(); ++i) dot += dy[i] * s[i];
        auto& dz = grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          dz[i] += s[i] * (dy[i] - dot);
        }
        break;
      }
      case Primitive::kWeightedSum: {
        const std::size_t m = node.inputs.size() - 1;
        const NodeId wid = node.inputs[m];
        const Tensor& w = value(wid);
        auto& dw = grad_of(wid);
        for (std::size_t k = 0; k < m; ++k) {
          const NodeId tid = node.inputs[k];
          if (nodes_[tid].op == Primitive::kZero) continue;
          const Tensor& t = value(tid);
          double dot = 0.0;
          for (std::size_t i = 0; i < dy.size(); ++i) dot += dy[i] * t[i];
          dw[k] += dot;
          if (nodes_[tid].op == Primitive::kConstant) continue;
          auto& dt = grad_of(tid);
          for (std::size_t i = 0; i < dy.size(); ++i) dt[i] += w[k] * dy[i];
        }
        break;
      }
      case Primitive::kSoftmaxCrossEntropy: {
        const Tensor& p = node.saved;
        const std::size_t n = p.dim(0), c = p.dim(1);
        const double scale = dy[0] / static_cast<double>(n);
        auto& dz = grad_of(node.inputs[0]);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            double g = p.at(r, j);
            if (static_cast<int>(j) == node.labels[r]) g -= 1.0;
            dz[r * c + j] += scale * g;
          }
        }
        break;
      }
    }
  }

  GradientVector out;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Tensor& v = nodes_[targets[k]].value;
    std::vector<double> g = std::move(grads[targets[k]]);
    if (g.empty()) g.assign(v.size(), 0.0);
    if (seed != 1.0) {
      for (double& e : g) e *= seed;
    }
    out.Set(wrt[k], Tensor::FromValues(v.shape(), std::move(g)));
  }
  return out;
}

absl::StatusOr<ForwardResult> Forward(const ComputationSpec& spec,
                                      const NamedTensors& params,
                                      const Batch& batch) {
  if (batch.size() == 0) {
    return absl::InvalidArgumentError("forward called on an empty batch");
  }
  if (batch.features.rank() != 2 || batch.features.dim(0) != batch.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch features must be [", batch.size(), ", d], got ",
                     ShapeToString(batch.features.shape())));
  }
  ForwardResult result;
  Tape& tape = result.tape;
  for (const auto& [name, value] : params) tape.Parameter(name, value);
  const NodeId input = tape.Constant(batch.features);
  absl::StatusOr<NodeId> logits = spec(tape, input);
  if (!logits.ok()) return logits.status();
  absl::StatusOr<NodeId> loss = tape.SoftmaxCrossEntropy(*logits, batch.labels);
  if (!loss.ok()) return loss.status();
  result.loss = tape.loss();
  return result;
}

absl::StatusOr<GradientVector> Backward(const ForwardResult& forward,
                                        std::span<const std::string> wrt,
                                        double seed) {
  return forward.tape.Backward(wrt, seed);
}

absl::StatusOr<Tensor> EvaluateLogits(const ComputationSpec& spec,
                                      const NamedTensors& params,
                                      const Tensor& features) {
  Tape tape;
  for (const auto& [name, value] : params) tape.Parameter(name, value);
  const NodeId input = tape.Constant(features);
  absl::StatusOr<NodeId> logits = spec(tape, input);
  if (!logits.ok()) return logits.status();
  return tape.value(*logits);
}

absl::StatusOr<std::vector<GradientVector>> PerSampleGradients(
    const ComputationSpec& spec, const NamedTensors& params,
    const Batch& batch, std::span<const std::string> wrt) {
  if (batch.size() == 0) {
    return absl::InvalidArgumentError("per-sample gradients of empty batch");
  }
  std::vector<GradientVector> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    absl::StatusOr<ForwardResult> fwd = Forward(spec, params, batch.Example(i));
    if (!fwd.ok()) return fwd.status();
    absl::StatusOr<GradientVector> g = fwd->tape.Backward(wrt);
    if (!g.ok()) return g.status();
    out.push_back(*std::move(g));
  }
  return out;
}

absl::StatusOr<GradientVector> FiniteDifferenceGradient(const ScalarFunction& f,
                                                        const NamedTensors& x,
                                                        double h) {
  if (!(h > 0.0)) {
    return absl::InvalidArgumentError("finite-difference step must be > 0");
  }
  GradientVector grad = x.ZerosLike();
  NamedTensors probe = x;
  for (auto& [name, tensor] : probe) {
    Tensor& g = grad.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double orig = tensor[i];
      tensor[i] = orig + h;
      absl::StatusOr<double> up = f(probe);
      if (!up.ok()) return up.status();
      tensor[i] = orig - h;
      absl::StatusOr<double> down = f(probe);
      if (!down.ok()) return down.status();
      tensor[i] = orig;
      g[i] = (*up - *down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace fnas

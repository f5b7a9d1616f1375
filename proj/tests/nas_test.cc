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

#include <cmath>
#include <string>
#include <vector>

#include "fnas/autodiff/tape.h"
#include "fnas/nas/search_space.h"
#include "gtest/gtest.h"
#include "testing/test_util.h"

namespace fnas {
namespace {

using ::fnas::testing::MaxRelativeError;
using ::fnas::testing::RandomBatch;
using ::fnas::testing::RandomTensor;
using ::fnas::testing::TestRng;

CandidateOpSet ZeroIdentity() {
  return *CandidateOpSet::Create(
      {{OpKind::kZero, "zero"}, {OpKind::kIdentity, "identity"}});
}

NamedTensors SaturatedArch(const Supernet& net, std::size_t op, double hi) {
  NamedTensors a = net.InitArch();
  for (auto& [_, t] : a) t[op] = hi;
  return a;
}

Tensor Head(const Tensor& x, const NamedTensors& w) {
  const Tensor& hw = w.at(kHeadWeight);
  const Tensor& hb = w.at(kHeadBias);
  Tensor out = Tensor::Zeros({x.dim(0), hw.dim(1)});
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    for (std::size_t k = 0; k < hw.dim(1); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.dim(1); ++i) s += x.at(r, i) * hw.at(i, k);
      out.at(r, k) = s + hb[k];
    }
  }
  return out;
}

double SupDiff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

TEST(CandidateOpSet, Validation) {
  EXPECT_EQ(CandidateOpSet::Default().size(), 6u);
  EXPECT_EQ(CandidateOpSet::Default().zero_index(), 0u);
  EXPECT_FALSE(CandidateOpSet::Create({{OpKind::kZero, "zero"}}).ok());
  EXPECT_FALSE(CandidateOpSet::Create(
                   {{OpKind::kZero, "zero"}, {OpKind::kDense, "dense"}})
                   .ok());
  EXPECT_FALSE(CandidateOpSet::Create({{OpKind::kZero, "zero"},
                                       {OpKind::kIdentity, "identity"},
                                       {OpKind::kZero, "zero2"}})
                   .ok());
  EXPECT_FALSE(CandidateOpSet::Create({{OpKind::kZero, "zero"},
                                       {OpKind::kIdentity, "identity"},
                                       {OpKind::kDense, "identity"}})
                   .ok());
  EXPECT_TRUE(ZeroIdentity().IndexOf("identity").ok());
  EXPECT_FALSE(ZeroIdentity().IndexOf("conv").ok());
}

TEST(CellGraph, Validation) {
  EXPECT_FALSE(CellGraph::Create({{}, {1}}).ok());       // self loop
  EXPECT_FALSE(CellGraph::Create({{}, {2}, {0}}).ok());  // forward edge
  EXPECT_FALSE(CellGraph::Create({{}, {}}).ok());        // orphan node
  EXPECT_FALSE(CellGraph::Create({{1}, {0}}).ok());      // input with parents
  absl::StatusOr<CellGraph> fc = CellGraph::FullyConnected(4);
  ASSERT_TRUE(fc.ok());
  EXPECT_EQ(fc->edges().size(), 10u);
  EXPECT_EQ(fc->output_node(), 4);
  absl::StatusOr<CellGraph> two = CellGraph::FullyConnected(2, 2);
  ASSERT_TRUE(two.ok());
  EXPECT_EQ(two->edges().size(), 5u);
  for (std::size_t e = 1; e < fc->edges().size(); ++e) {
    const Edge& a = fc->edges()[e - 1];
    const Edge& b = fc->edges()[e];
    EXPECT_TRUE(a.to < b.to || (a.to == b.to && a.from < b.from));
  }
}

TEST(MixedEdge, EqualScoresAverageCandidates) {
  RngStream rng = TestRng(1);
  CandidateOpSet ops = CandidateOpSet::Default();
  CellGraph cell = *CellGraph::Chain(1);
  Supernet net(cell, ops, 3, 2);
  NamedTensors w = net.InitWeights(5);
  Tensor x = RandomTensor({4, 3}, rng);
  const Edge e = cell.edges()[0];
  Tensor mixed = *MixedEdgeForward(x, ops, Tensor::Filled({6}, 0.7), w, e);
  Tensor sum = Tensor::Zeros({4, 3});
  for (std::size_t m = 0; m < ops.size(); ++m) {
    Tensor one_hot = Tensor::Filled({6}, 0.0);
    one_hot[m] = 800.0;
    Tensor om = *MixedEdgeForward(x, ops, one_hot, w, e);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += om[i] / 6.0;
  }
  EXPECT_LT(SupDiff(mixed, sum), 1e-14);
}

TEST(MixedEdge, ClosedFormMixingWeights) {
  std::vector<double> a = {std::log(3.0), 0.0};
  std::vector<double> w = MixingWeights(a);
  EXPECT_NEAR(w[0], 0.75, 1e-15);
  EXPECT_NEAR(w[1], 0.25, 1e-15);
  RngStream rng = TestRng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(6);
    for (double& v : s) v = 5.0 * rng.NextGaussian();
    std::vector<double> mw = MixingWeights(s);
    double total = 0.0;
    for (double v : mw) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(MixedEdge, SaturationSelectsOneOp) {
  RngStream rng = TestRng(3);
  CandidateOpSet ops = CandidateOpSet::Default();
  CellGraph cell = *CellGraph::Chain(1);
  Supernet net(cell, ops, 3, 2);
  NamedTensors w = net.InitWeights(6);
  Tensor x = RandomTensor({4, 3}, rng);
  const Edge e = cell.edges()[0];
  const std::size_t relu = *ops.IndexOf("dense_relu");
  Tensor scores = Tensor::Zeros({6});
  scores[relu] = 100.0;
  Tensor got = *MixedEdgeForward(x, ops, scores, w, e);
  Tape tape;
  for (const auto& [name, value] : w) tape.Parameter(name, value);
  Tensor want = tape.value(*ApplyOp(tape, tape.Constant(x), ops.op(relu), e));
  double scale = 0.0;
  for (double v : want.values()) scale = std::max(scale, std::abs(v));
  EXPECT_LE(SupDiff(got, want), 1e-8 * scale);
}

TEST(MixedEdge, WrongScoreLengthIsAnError) {
  CandidateOpSet ops = CandidateOpSet::Default();
  CellGraph cell = *CellGraph::Chain(1);
  Supernet net(cell, ops, 3, 2);
  EXPECT_FALSE(MixedEdgeForward(Tensor::Zeros({1, 3}), ops, Tensor::Zeros({5}),
                                net.InitWeights(1), cell.edges()[0])
                   .ok());
}

TEST(Supernet, IdentityChainIsHeadOfInput) {
  RngStream rng = TestRng(4);
  Supernet net(*CellGraph::Chain(3), ZeroIdentity(), 4, 3);
  NamedTensors w = net.InitWeights(7);
  NamedTensors a = SaturatedArch(net, 1, 200.0);
  Tensor x = RandomTensor({5, 4}, rng);
  Tensor logits = *net.Logits(x, w, a);
  EXPECT_LT(SupDiff(logits, Head(x, w)), 1e-12);
}

TEST(Supernet, ZeroSaturatedCellGivesHeadBias) {
  RngStream rng = TestRng(5);
  Supernet net(*CellGraph::FullyConnected(3), CandidateOpSet::Default(), 4, 3);
  NamedTensors w = net.InitWeights(8);
  NamedTensors a = SaturatedArch(net, 0, 800.0);
  Tensor x = RandomTensor({5, 4}, rng);
  Tensor logits = *net.Logits(x, w, a);
  EXPECT_LT(SupDiff(logits, Head(Tensor::Zeros({5, 4}), w)), 1e-12);
}

TEST(Supernet, GradientsMatchFiniteDifferences) {
  RngStream rng = TestRng(6);
  int checked = 0;
  while (checked < 5) {
    const int inter = 1 + static_cast<int>(rng.NextBelow(3));
    Supernet net(*CellGraph::FullyConnected(inter), CandidateOpSet::Default(),
                 3, 3);
    NamedTensors w = net.InitWeights(rng.NextU64());
    NamedTensors a = net.InitArch();
    for (auto& [_, t] : a) {
      for (double& v : t.mutable_values()) v = rng.NextGaussian();
    }
    NamedTensors params = *w.Merge(a);
    Batch b = RandomBatch(4, 3, 3, rng);
    absl::StatusOr<ForwardResult> fwd = Forward(net.Spec(), params, b);
    ASSERT_TRUE(fwd.ok()) << fwd.status();
    if (testing::NearReluKink(fwd->tape, 1e-3)) continue;
    std::vector<std::string> wrt = params.Names();
    GradientVector g = *Backward(*fwd, wrt);
    ScalarFunction f = [&](const NamedTensors& x) -> absl::StatusOr<double> {
      absl::StatusOr<ForwardResult> r = Forward(net.Spec(), x, b);
      if (!r.ok()) return r.status();
      return r->loss;
    };
    GradientVector fd = *FiniteDifferenceGradient(f, params, 1e-5);
    EXPECT_LT(MaxRelativeError(g, fd, 1e-3), 1e-5);
    ++checked;
  }
}

TEST(Supernet, CheckParametersNamesMismatch) {
  Supernet net(*CellGraph::Chain(2), CandidateOpSet::Default(), 3, 2);
  NamedTensors w = net.InitWeights(1);
  w.Set("edge0_1/dense/w", Tensor::Zeros({2, 3}));
  absl::Status s = net.CheckParameters(w, net.InitArch());
  ASSERT_FALSE(s.ok());
  EXPECT_NE(s.message().find("edge0_1/dense/w"), absl::string_view::npos);
}

TEST(Discretize, ArgmaxAndTies) {
  CellGraph cell = *CellGraph::Chain(1);
  std::vector<OpDescriptor> desc = {{OpKind::kIdentity, "identity"},
                                    {OpKind::kDense, "dense"},
                                    {OpKind::kMeanPool, "mean_pool"},
                                    {OpKind::kZero, "zero"}};
  CandidateOpSet ops = *CandidateOpSet::Create(desc);
  NamedTensors a;
  a.Set(ArchKey(cell.edges()[0]), Tensor::FromValues({4}, {0.1, 0.9, 0.3, 5}));
  DiscreteArchitecture d = *Discretize(a, cell, ops, 1);
  EXPECT_EQ(d.retained[0], std::vector<std::size_t>{1});

  a.Set(ArchKey(cell.edges()[0]), Tensor::FromValues({4}, {0.5, 0.5, 0.2, 0}));
  EXPECT_EQ(Discretize(a, cell, ops, 1)->retained[0],
            std::vector<std::size_t>{0});
  EXPECT_EQ(Discretize(a, cell, ops, 3)->retained[0],
            (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_FALSE(Discretize(a, cell, ops, 0).ok());
  EXPECT_FALSE(Discretize(a, cell, ops, 4).ok());
}

TEST(Discretize, InvariantUnderPerEdgeShift) {
  RngStream rng = TestRng(7);
  CellGraph cell = *CellGraph::FullyConnected(4);
  CandidateOpSet ops = CandidateOpSet::Default();
  Supernet net(cell, ops, 2, 2);
  for (int t = 0; t < 100; ++t) {
    NamedTensors a = net.InitArch();
    for (auto& [_, s] : a) {
      // Quantized scores make exact ties common.
      for (double& v : s.mutable_values()) {
        v = static_cast<double>(rng.NextBelow(4)) * 0.25;
      }
    }
    NamedTensors shifted = a;
    for (auto& [_, s] : shifted) {
      const double c = static_cast<double>(rng.NextBelow(64)) - 32.0;
      for (double& v : s.mutable_values()) v += c;
    }
    for (int k = 1; k <= 3; ++k) {
      EXPECT_EQ(*Discretize(a, cell, ops, k), *Discretize(shifted, cell, ops, k));
    }
  }
}

TEST(ArchitectureText, RoundTrip) {
  RngStream rng = TestRng(8);
  CellGraph cell = *CellGraph::FullyConnected(4);
  CandidateOpSet ops = CandidateOpSet::Default();
  Supernet net(cell, ops, 2, 2);
  NamedTensors a = net.InitArch();
  for (auto& [_, s] : a) {
    for (double& v : s.mutable_values()) v = rng.NextGaussian();
  }
  for (int k = 1; k <= 2; ++k) {
    DiscreteArchitecture d = *Discretize(a, cell, ops, k);
    std::string text = ArchitectureToText(d, cell, ops);
    absl::StatusOr<DiscreteArchitecture> back =
        ArchitectureFromText(text, cell, ops);
    ASSERT_TRUE(back.ok()) << back.status();
    EXPECT_EQ(*back, d);
  }
  EXPECT_EQ(ArchitectureToText(*Discretize(a, *CellGraph::Chain(1), ops, 1),
                               *CellGraph::Chain(1), ops)
                .substr(0, 11),
            "edge 0->1: ");
}

TEST(ArchitectureText, RejectsMalformed) {
  CellGraph cell = *CellGraph::Chain(2);
  CandidateOpSet ops = CandidateOpSet::Default();
  EXPECT_FALSE(ArchitectureFromText("edge 0->1: [dense]\n", cell, ops).ok());
  EXPECT_FALSE(
      ArchitectureFromText("edge 0->1: [zero]\nedge 1->2: [dense]\n", cell, ops)
          .ok());
  EXPECT_FALSE(ArchitectureFromText(
                   "edge 0->2: [dense]\nedge 1->2: [dense]\n", cell, ops)
                   .ok());
  EXPECT_FALSE(ArchitectureFromText("edge 0->1: [conv]\nedge 1->2: [dense]\n",
                                    cell, ops)
                   .ok());
  EXPECT_TRUE(ArchitectureFromText("edge 0->1: [identity]\nedge 1->2: [dense]\n",
                                   cell, ops)
                  .ok());
}

TEST(Materialize, IdentityOnlyIsHeadOfInput) {
  RngStream rng = TestRng(9);
  CellGraph cell = *CellGraph::FullyConnected(3);
  CandidateOpSet ops = CandidateOpSet::Default();
  DiscreteArchitecture d;
  d.top_k = 1;
  d.retained.assign(cell.edges().size(), {*ops.IndexOf("identity")});
  MaterializedNetwork m = *Materialize(d, cell, ops, 3, 2, 1);
  Tensor x = RandomTensor({4, 3}, rng);
  // Fully connected identities: node i carries 2^(i-1) copies of x.
  Tensor scaled = x;
  for (double& v : scaled.mutable_values()) v *= 4.0;
  EXPECT_LT(SupDiff(*m.network.Logits(x, m.weights), Head(scaled, m.weights)),
            1e-12);

  DiscreteArchitecture chain_arch;
  chain_arch.top_k = 1;
  chain_arch.retained.assign(2, {*ops.IndexOf("identity")});
  MaterializedNetwork c = *Materialize(chain_arch, *CellGraph::Chain(2), ops, 3,
                                       2, 1);
  EXPECT_LT(SupDiff(*c.network.Logits(x, c.weights), Head(x, c.weights)),
            1e-15);
}

TEST(Materialize, SameSeedSameWeights) {
  CellGraph cell = *CellGraph::FullyConnected(4);
  CandidateOpSet ops = CandidateOpSet::Default();
  Supernet net(cell, ops, 4, 3);
  DiscreteArchitecture d = *Discretize(net.InitArch(), cell, ops, 2);
  EXPECT_EQ(Materialize(d, cell, ops, 4, 3, 11)->weights,
            Materialize(d, cell, ops, 4, 3, 11)->weights);
  EXPECT_NE(Materialize(d, cell, ops, 4, 3, 11)->weights,
            Materialize(d, cell, ops, 4, 3, 12)->weights);
}

TEST(Materialize, MatchesSaturatedSupernet) {
  RngStream rng = TestRng(10);
  CellGraph cell = *CellGraph::FullyConnected(4);
  CandidateOpSet ops = CandidateOpSet::Default();
  Supernet net(cell, ops, 4, 3);
  NamedTensors w = net.InitWeights(3);
  for (int k = 1; k <= 2; ++k) {
    for (int trial = 0; trial < 5; ++trial) {
      NamedTensors a = net.InitArch();
      for (auto& [_, s] : a) {
        for (double& v : s.mutable_values()) v = rng.NextGaussian();
      }
      DiscreteArchitecture d = *Discretize(a, cell, ops, k);
      NamedTensors sat = net.InitArch();
      for (std::size_t e = 0; e < cell.edges().size(); ++e) {
        Tensor& s = sat.at(ArchKey(cell.edges()[e]));
        for (std::size_t m : d.retained[e]) s[m] = 60.0;
      }
      MaterializedNetwork m = *Materialize(d, cell, ops, 4, 3, 99);
      NamedTensors shared = *w.Select(m.network.weight_names());
      Tensor x = RandomTensor({6, 4}, rng);
      EXPECT_LT(SupDiff(*m.network.Logits(x, shared), *net.Logits(x, w, sat)),
                1e-6);
    }
  }
}

TEST(Materialize, RejectsInvalidArchitecture) {
  CellGraph cell = *CellGraph::Chain(2);
  CandidateOpSet ops = CandidateOpSet::Default();
  DiscreteArchitecture d;
  d.top_k = 1;
  d.retained = {{0}, {1}};
  EXPECT_FALSE(Materialize(d, cell, ops, 2, 2, 0).ok());
  d.retained = {{1}};
  EXPECT_FALSE(Materialize(d, cell, ops, 2, 2, 0).ok());
}

TEST(InitUniform, BoundedByFanIn) {
  Tensor t = InitUniform("w", {16, 16}, 16, 4);
  for (double v : t.values()) EXPECT_LE(std::abs(v), 0.25);
  EXPECT_EQ(t, InitUniform("w", {16, 16}, 16, 4));
  EXPECT_NE(t, InitUniform("v", {16, 16}, 16, 4));
}

TEST(ClassificationError, CountsArgmaxMisses) {
  Tensor logits = Tensor::FromValues({3, 2}, {1, 0, 0, 1, 2, 3});
  std::vector<int> labels = {0, 0, 1};
  EXPECT_NEAR(ClassificationError(logits, labels), 1.0 / 3.0, 1e-15);
}

}  // namespace
}  // namespace fnas

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
#include "fnas/bilevel/bilevel.h"
#include "fnas/nas/search_space.h"
#include "gtest/gtest.h"
#include "testing/test_util.h"
#include "testing/toy_objectives.h"

namespace fnas {
namespace {

using ::fnas::testing::MaxRelativeError;
using ::fnas::testing::PolynomialObjective;
using ::fnas::testing::QuadraticObjective;
using ::fnas::testing::RandomBatch;
using ::fnas::testing::ScalarBatch;
using ::fnas::testing::TestRng;
using ::fnas::testing::Vector;

SupernetObjective SmallSupernet() {
  return SupernetObjective(
      Supernet(*CellGraph::FullyConnected(2), CandidateOpSet::Default(), 3, 3));
}

NamedTensors RandomArch(const Supernet& net, RngStream& rng) {
  NamedTensors a = net.InitArch();
  for (auto& [_, t] : a) {
    for (double& v : t.mutable_values()) v = rng.NextGaussian();
  }
  return a;
}

double SupNorm(const GradientVector& a, const GradientVector& b) {
  GradientVector d = a;
  d.AddScaled(b, -1.0);
  return d.MaxAbs();
}

TEST(HyperParameters, Validate) {
  EXPECT_TRUE(HyperParameters{}.Validate().ok());
  EXPECT_FALSE((HyperParameters{-1.0, 0.1, 0.01, true}.Validate().ok()));
  EXPECT_FALSE((HyperParameters{0.1, -1.0, 0.01, true}.Validate().ok()));
  EXPECT_FALSE((HyperParameters{0.1, 0.1, 0.0, true}.Validate().ok()));
}

TEST(WeightStep, Examples) {
  NamedTensors w = Vector("w", {1.0, 1.0});
  EXPECT_EQ(*WeightStep(w, Vector("w", {5.0, -3.0}), 0.0), w);
  NamedTensors out = *WeightStep(w, Vector("w", {1.0, 1.0}), 0.1);
  EXPECT_DOUBLE_EQ(out.at("w")[0], 0.9);
  EXPECT_DOUBLE_EQ(out.at("w")[1], 0.9);
  EXPECT_FALSE(WeightStep(w, Vector("w", {1.0}), 0.1).ok());
  EXPECT_FALSE(WeightStep(w, Vector("v", {1.0, 1.0}), 0.1).ok());
}

TEST(WeightStep, SequentialStepsOnLinearLoss) {
  // For a linear loss the gradient does not depend on W, so two steps with
  // g1 then g2 land where one step with g1 + g2 does.
  PolynomialObjective linear(1);
  Batch b1 = ScalarBatch({0.5, 1.5});
  Batch b2 = ScalarBatch({-2.0, 0.25});
  NamedTensors a = Vector("a", {0.3, -0.7, 1.1});
  NamedTensors w = Vector("w", {0.2, 0.4, -0.6});
  GradientVector g1 = *linear.GradWeights(b1, a, w);
  NamedTensors mid = *WeightStep(w, g1, 0.1);
  GradientVector g2 = *linear.GradWeights(b2, a, mid);
  NamedTensors two = *WeightStep(mid, g2, 0.1);
  GradientVector sum = g1;
  sum.AddScaled(*linear.GradWeights(b2, a, w), 1.0);
  NamedTensors one = *WeightStep(w, sum, 0.1);
  EXPECT_LT(SupNorm(two, one), 1e-15);
}

TEST(WeightStep, LinearInGradient) {
  RngStream rng = TestRng(1);
  NamedTensors w = Vector("w", {0.0, 0.0, 0.0});
  for (int t = 0; t < 50; ++t) {
    GradientVector g = Vector("w", {rng.NextGaussian(), rng.NextGaussian(),
                                    rng.NextGaussian()});
    const double c = rng.NextGaussian();
    GradientVector cg = g;
    cg.Scale(c);
    NamedTensors lhs = *WeightStep(w, cg, 0.3);
    NamedTensors rhs = *WeightStep(w, g, 0.3);
    rhs.Scale(c);
    EXPECT_LT(MaxRelativeError(lhs, rhs, 1e-300), 1e-15);
  }
}

TEST(VirtualStep, Examples) {
  QuadraticObjective quad;
  Batch b = ScalarBatch({0.0});
  NamedTensors w = Vector("w", {1.0, 1.0});
  NamedTensors a = Vector("a", {0.0});
  GradientVector g = *quad.GradWeights(b, a, w);
  EXPECT_EQ(*VirtualStep(w, g, 0.0), w);
  NamedTensors wp = *VirtualStep(w, g, 0.1);
  EXPECT_DOUBLE_EQ(wp.at("w")[0], 0.9);
  EXPECT_DOUBLE_EQ(wp.at("w")[1], 0.9);
}

TEST(VirtualStep, IdenticalPartiesScaleLearningRate) {
  RngStream rng = TestRng(2);
  SupernetObjective obj = SmallSupernet();
  const Supernet& net = obj.supernet();
  NamedTensors w = net.InitWeights(3);
  NamedTensors a = RandomArch(net, rng);
  Batch b = RandomBatch(6, 3, 3, rng);
  GradientVector g = *obj.GradWeights(b, a, w);
  for (int k : {2, 3, 4, 8}) {
    GradientVector sum = g.ZerosLike();
    for (int p = 0; p < k; ++p) sum.AddScaled(*obj.GradWeights(b, a, w), 1.0);
    NamedTensors federated = *VirtualStep(w, sum, 0.05);
    NamedTensors single = *VirtualStep(w, g, 0.05 * k);
    EXPECT_LT(SupNorm(federated, single), 1e-15);
  }
}

TEST(ArchGradientSecondOrder, ZeroXiIsValidationGradient) {
  RngStream rng = TestRng(3);
  SupernetObjective obj = SmallSupernet();
  const Supernet& net = obj.supernet();
  NamedTensors w = net.InitWeights(4);
  NamedTensors a = RandomArch(net, rng);
  Batch train = RandomBatch(5, 3, 3, rng);
  Batch val = RandomBatch(5, 3, 3, rng);
  GradientVector sum = *obj.GradWeights(train, a, w);
  NamedTensors wp = *VirtualStep(w, sum, 0.0);
  EXPECT_EQ(wp, w);
  GradientVector h =
      *ArchGradientSecondOrder(obj, train, val, a, w, wp, 0.0, 1e-3);
  EXPECT_EQ(h, *ArchGradientFirstOrder(obj, val, a, w));
  HyperParameters hp;
  hp.xi = 0.0;
  EXPECT_EQ(*ArchGradientSecondOrderRelative(obj, train, val, a, w, wp, hp),
            *ArchGradientFirstOrder(obj, val, a, w));
}

TEST(ArchGradientSecondOrder, BilinearMatchesUnrolledGradient) {
  PolynomialObjective bilinear(1);
  Batch train = ScalarBatch({0.3, 0.9, -0.2});
  Batch val = ScalarBatch({1.4, -0.1});
  const double ct = testing::BatchMeanFeature(train);
  const double cv = testing::BatchMeanFeature(val);
  RngStream rng = TestRng(4);
  for (int t = 0; t < 20; ++t) {
    const double av = rng.NextGaussian(), wv = rng.NextGaussian();
    const double xi = 0.05 + 0.1 * rng.NextUniform();
    NamedTensors a = Vector("a", {av});
    NamedTensors w = Vector("w", {wv});
    NamedTensors wp = *VirtualStep(w, *bilinear.GradWeights(train, a, w), xi);
    // d/dA of L_val(A, W - xi grad_W L_train(A, W)) for L = c A W.
    const double analytic = cv * (wv - xi * ct * av) - xi * ct * cv * av;
    for (double eps : {1e-1, 1e-3}) {
      GradientVector h =
          *ArchGradientSecondOrder(bilinear, train, val, a, w, wp, xi, eps);
      EXPECT_NEAR(h.at("a")[0], analytic, 1e-10);
    }
  }
}

TEST(ArchGradientSecondOrder, QuarticCorrectionIsSecondOrderInEpsilon) {
  PolynomialObjective quartic(4);
  Batch train = ScalarBatch({0.8, 1.2});
  Batch val = ScalarBatch({0.7, 1.1, 0.9});
  NamedTensors a = Vector("a", {0.9, -1.3});
  NamedTensors w = Vector("w", {1.1, 0.8});
  const double xi = 0.1;
  NamedTensors wp = *VirtualStep(w, *quartic.GradWeights(train, a, w), xi);
  GradientVector v = *quartic.GradWeights(val, a, wp);
  GradientVector exact = quartic.MixedHvp(train, a, w, v, xi);
  std::vector<double> errors;
  for (double eps : {1e-2, 5e-3, 2.5e-3}) {
    GradientVector fd =
        *FiniteDifferenceCorrection(quartic, train, a, w, v, xi, eps);
    errors.push_back(SupNorm(fd, exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
  }
}

TEST(ArchGradientSecondOrder, NonPositiveEpsilonIsAnError) {
  PolynomialObjective bilinear(1);
  Batch b = ScalarBatch({1.0});
  NamedTensors a = Vector("a", {1.0});
  NamedTensors w = Vector("w", {1.0});
  EXPECT_FALSE(ArchGradientSecondOrder(bilinear, b, b, a, w, w, 0.1, 0.0).ok());
}

TEST(ArchGradientSecondOrder, StationaryValidationFallsBackToFirstOrder) {
  // a = 0 makes grad_W L(val) vanish; the relative step is undefined.
  PolynomialObjective quartic(4);
  Batch b = ScalarBatch({1.0});
  NamedTensors a = Vector("a", {0.0});
  NamedTensors w = Vector("w", {1.5});
  HyperParameters hp;
  hp.xi = 0.2;
  GradientVector h =
      *ArchGradientSecondOrderRelative(quartic, b, b, a, w, w, hp);
  EXPECT_EQ(h, *ArchGradientFirstOrder(quartic, b, a, w));
}

TEST(ArchGradientSecondOrder, RelativeEpsilonUsesValidationNorm) {
  PolynomialObjective quartic(4);
  Batch train = ScalarBatch({0.8});
  Batch val = ScalarBatch({1.3});
  NamedTensors a = Vector("a", {0.5, 2.0});
  NamedTensors w = Vector("w", {1.0, -0.5});
  HyperParameters hp;
  hp.xi = 0.1;
  hp.fd_epsilon_scale = 0.02;
  NamedTensors wp = *VirtualStep(w, *quartic.GradWeights(train, a, w), hp.xi);
  const double eps =
      hp.fd_epsilon_scale / quartic.GradWeights(val, a, wp)->L2Norm();
  EXPECT_EQ(*ArchGradientSecondOrderRelative(quartic, train, val, a, w, wp, hp),
            *ArchGradientSecondOrder(quartic, train, val, a, w, wp, hp.xi, eps));
}

TEST(ArchGradientFirstOrder, SaturatedEdgeIgnoresOtherScores) {
  RngStream rng = TestRng(5);
  Supernet net(*CellGraph::Chain(1), CandidateOpSet::Default(), 3, 3);
  SupernetObjective obj(net);
  NamedTensors w = net.InitWeights(6);
  NamedTensors a = net.InitArch();
  const std::size_t sel = *net.ops().IndexOf("dense_tanh");
  for (auto& [_, t] : a) t[sel] = 25.0;
  Batch val = RandomBatch(8, 3, 3, rng);
  GradientVector h = *ArchGradientFirstOrder(obj, val, a, w);
  for (const auto& [_, t] : h) {
    for (std::size_t m = 0; m < t.size(); ++m) {
      EXPECT_LT(std::abs(t[m]), 1e-6);
    }
  }
}

TEST(ArchGradientFirstOrder, MatchesFiniteDifferencesInA) {
  RngStream rng = TestRng(7);
  SupernetObjective obj = SmallSupernet();
  const Supernet& net = obj.supernet();
  NamedTensors w = net.InitWeights(8);
  NamedTensors a = RandomArch(net, rng);
  Batch val = RandomBatch(6, 3, 3, rng);
  GradientVector h = *ArchGradientFirstOrder(obj, val, a, w);
  ScalarFunction f = [&](const NamedTensors& x) { return obj.Loss(val, x, w); };
  GradientVector fd = *FiniteDifferenceGradient(f, a, 1e-5);
  EXPECT_LT(MaxRelativeError(h, fd, 1e-3), 1e-5);
}

TEST(ArchGradientFirstOrder, PerSampleMeanMatchesBatch) {
  RngStream rng = TestRng(9);
  SupernetObjective obj = SmallSupernet();
  const Supernet& net = obj.supernet();
  NamedTensors w = net.InitWeights(10);
  NamedTensors a = RandomArch(net, rng);
  Batch val = RandomBatch(8, 3, 3, rng);
  std::vector<GradientVector> ps = *obj.PerSampleGradArch(val, a, w);
  GradientVector mean = ps[0].ZerosLike();
  for (const GradientVector& g : ps) mean.AddScaled(g, 1.0 / 8.0);
  EXPECT_LT(MaxRelativeError(mean, *obj.GradArch(val, a, w), 1e-12), 1e-12);
}

TEST(ArchStep, Examples) {
  NamedTensors a = Vector("a", {0.0, 0.0});
  EXPECT_EQ(*ArchStep(a, Vector("a", {1.0, -1.0}), 0.0), a);
  NamedTensors out = *ArchStep(a, Vector("a", {1.0, -1.0}), 0.5);
  EXPECT_EQ(out.at("a")[0], -0.5);
  EXPECT_EQ(out.at("a")[1], 0.5);
  EXPECT_FALSE(ArchStep(a, Vector("b", {1.0, -1.0}), 0.5).ok());
}

TEST(ArchStep, ConvexSurrogateConverges) {
  QuadraticObjective quad;
  Batch b = ScalarBatch({0.75});
  NamedTensors a = Vector("a", {3.0, -2.0, 0.5});
  NamedTensors w = Vector("w", {0.0});
  double prev = quad.GradArch(b, a, w)->L2Norm();
  for (int step = 0; step < 40; ++step) {
    a = *ArchStep(a, *quad.GradArch(b, a, w), 0.2);
    const double norm = quad.GradArch(b, a, w)->L2Norm();
    EXPECT_LT(norm, prev);
    prev = norm;
  }
  EXPECT_LT(prev, 1e-3);
}

}  // namespace
}  // namespace fnas

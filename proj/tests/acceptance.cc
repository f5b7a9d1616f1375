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

// Acceptance runner: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all of them.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "fnas/autodiff/tape.h"
#include "fnas/bilevel/bilevel.h"
#include "fnas/cli/checkpoint.h"
#include "fnas/cli/commands.h"
#include "fnas/cli/config.h"
#include "fnas/dp/mechanism.h"
#include "fnas/federation/search.h"
#include "fnas/nas/search_space.h"
#include "fnas/privacy/accountant.h"
#include "fnas/privacy/tradeoff.h"
#include "fnas/util/format.h"
#include "testing/test_util.h"
#include "testing/toy_objectives.h"

#ifndef FNAS_CLI_PATH
#error "FNAS_CLI_PATH must name the fnas executable"
#endif

namespace fnas {
namespace {

using ::fnas::testing::MaxRelativeError;
using ::fnas::testing::RandomBatch;
using ::fnas::testing::RandomTensor;
using ::fnas::testing::TestRng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome Fail(std::string why) { return {false, std::move(why)}; }

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

double SupNorm(const NamedTensors& a, const NamedTensors& b) {
  double m = 0.0;
  for (const auto& [name, ta] : a) {
    const Tensor& tb = b.at(name);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      m = std::max(m, std::abs(ta[i] - tb[i]));
    }
  }
  return m;
}

// ------------------------------------------------------------- criterion 1

Outcome GradientCorrectness() {
  const auto start = std::chrono::steady_clock::now();
  RngStream rng = TestRng(1001);
  double worst_w = 0.0, worst_a = 0.0;
  int checked = 0, redrawn = 0;
  while (checked < 100) {
    // Cells of at most five nodes: one input plus up to four intermediates.
    const int inter = 1 + static_cast<int>(rng.NextBelow(4));
    const std::size_t d = 2 + rng.NextBelow(4);
    const std::size_t c = 2 + rng.NextBelow(3);
    Supernet net(*CellGraph::FullyConnected(inter), CandidateOpSet::Default(),
                 d, c);
    NamedTensors w = net.InitWeights(rng.NextU64());
    NamedTensors a = net.InitArch();
    for (auto& [_, t] : a) {
      for (double& v : t.mutable_values()) v = rng.NextGaussian();
    }
    const NamedTensors params = *w.Merge(a);
    const Batch b = RandomBatch(1 + rng.NextBelow(5), d, static_cast<int>(c), rng);
    absl::StatusOr<ForwardResult> fwd = Forward(net.Spec(), params, b);
    if (!fwd.ok()) return Fail(std::string(fwd.status().message()));
    if (testing::NearReluKink(fwd->tape, 1e-3)) {
      ++redrawn;
      continue;
    }
    const std::vector<std::string> wrt = params.Names();
    absl::StatusOr<GradientVector> g = Backward(*fwd, wrt);
    if (!g.ok()) return Fail(std::string(g.status().message()));
    ScalarFunction f = [&](const NamedTensors& x) -> absl::StatusOr<double> {
      absl::StatusOr<ForwardResult> r = Forward(net.Spec(), x, b);
      if (!r.ok()) return r.status();
      return r->loss;
    };
    absl::StatusOr<GradientVector> fd = FiniteDifferenceGradient(f, params, 1e-5);
    if (!fd.ok()) return Fail(std::string(fd.status().message()));
    worst_w = std::max(worst_w,
                       MaxRelativeError(*g->Select(net.weight_names()),
                                        *fd->Select(net.weight_names()), 1e-3));
    worst_a = std::max(worst_a,
                       MaxRelativeError(*g->Select(net.arch_names()),
                                        *fd->Select(net.arch_names()), 1e-3));
    ++checked;
  }
  const double secs = Seconds(start);
  return {worst_w < 1e-5 && worst_a < 1e-5 && secs < 120.0,
          absl::StrFormat("100 instances (%d redrawn near a relu kink), max "
                          "rel err W %.3g, A %.3g, %.1f s",
                          redrawn, worst_w, worst_a, secs)};
}

// ------------------------------------------------------------- criterion 2

Batch ScalarBatch(std::vector<double> xs) {
  const std::size_t n = xs.size();
  return Batch{Tensor::FromValues({n, 1}, std::move(xs)), std::vector<int>(n, 0)};
}

NamedTensors Vector(const std::string& name, std::vector<double> v) {
  NamedTensors out;
  const std::size_t n = v.size();
  out.Set(name, Tensor::FromValues({n}, std::move(v)));
  return out;
}

Outcome FiniteDifferenceOrder() {
  testing::PolynomialObjective quartic(4);
  RngStream rng = TestRng(1002);
  double lo = 1e9, hi = -1e9;
  for (int trial = 0; trial < 10; ++trial) {
    auto draw = [&](std::size_t n, double a, double b) {
      std::vector<double> v(n);
      for (double& x : v) x = a + (b - a) * rng.NextUniform();
      return v;
    };
    const Batch train = ScalarBatch(draw(3, 0.5, 1.5));
    const Batch val = ScalarBatch(draw(3, 0.5, 1.5));
    const NamedTensors a = Vector("a", draw(4, -1.5, 1.5));
    const NamedTensors w = Vector("w", draw(4, 0.5, 1.5));
    const double xi = 0.1;
    const NamedTensors wp = *VirtualStep(w, *quartic.GradWeights(train, a, w), xi);
    const GradientVector v = *quartic.GradWeights(val, a, wp);
    const GradientVector exact = quartic.MixedHvp(train, a, w, v, xi);
    std::vector<double> errors;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
      errors.push_back(SupNorm(
          *FiniteDifferenceCorrection(quartic, train, a, w, v, xi, eps), exact));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double order = std::log2(errors[i - 1] / errors[i]);
      lo = std::min(lo, order);
      hi = std::max(hi, order);
    }
  }
  const bool order_ok = lo >= 1.8 && hi <= 2.2;

  // xi = 0 on a random supernet: H is the plain validation gradient.
  SupernetObjective obj(Supernet(*CellGraph::FullyConnected(2),
                                 CandidateOpSet::Default(), 3, 3));
  const Supernet& net = obj.supernet();
  bool collapse_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    NamedTensors w = net.InitWeights(rng.NextU64());
    NamedTensors arch = net.InitArch();
    for (auto& [_, t] : arch) {
      for (double& x : t.mutable_values()) x = rng.NextGaussian();
    }
    const Batch train = RandomBatch(5, 3, 3, rng);
    const Batch val = RandomBatch(5, 3, 3, rng);
    const NamedTensors wp = *VirtualStep(w, *obj.GradWeights(train, arch, w), 0.0);
    HyperParameters hp;
    hp.xi = 0.0;
    const GradientVector plain = *ArchGradientFirstOrder(obj, val, arch, w);
    collapse_ok = collapse_ok &&
                  *ArchGradientSecondOrder(obj, train, val, arch, w, wp, 0.0,
                                           1e-3) == plain &&
                  *ArchGradientSecondOrderRelative(obj, train, val, arch, w, wp,
                                                   hp) == plain;
  }
  return {order_ok && collapse_ok,
          absl::StrFormat("empirical order in [%.4f, %.4f] over 10 instances; "
                          "xi=0 bit-identical to validation gradient: %s",
                          lo, hi, collapse_ok ? "yes" : "no")};
}

// ------------------------------------------------------------- criterion 3

GradientVector RandomGradient(RngStream& rng, double scale) {
  GradientVector g;
  g.Set("a", RandomTensor({3}, rng, scale));
  g.Set("b", RandomTensor({2, 2}, rng, scale));
  return g;
}

Outcome DpMechanism() {
  const auto start = std::chrono::steady_clock::now();
  RngStream rng = TestRng(1003);
  int clip_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r = std::exp(rng.NextGaussian());
    const GradientVector g = RandomGradient(rng, std::exp(2.0 * rng.NextGaussian()));
    const GradientVector once = *Clip(g, r);
    const GradientVector twice = *Clip(once, r);
    if (!(once.L2Norm() <= r) || !(twice == once)) ++clip_failures;
  }
  double worst_excess = -1e9;
  for (int pair = 0; pair < 500; ++pair) {
    const std::size_t n = 1 + rng.NextBelow(20);
    const double r = std::exp(rng.NextGaussian());
    std::vector<GradientVector> list;
    for (std::size_t i = 0; i < n; ++i) {
      list.push_back(RandomGradient(rng, std::exp(2.0 * rng.NextGaussian())));
    }
    const double d = *SensitivityProbe(list, rng.NextBelow(n), r);
    worst_excess = std::max(worst_excess, d - r);
  }
  // Noise on a zero sum of one example: the output is the noise itself.
  const double r = 0.7, sigma = 1.3;
  const int draws = 100000;
  RngStream noise_rng(1003, 0, 0, StreamPhase::kWeightNoise);
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    GradientVector z = Vector("g", {0.0});
    if (!AddNoiseAndNormalize(z, r, sigma, 1.0, noise_rng).ok()) {
      return Fail("AddNoiseAndNormalize failed");
    }
    sum_sq += z.at("g")[0] * z.at("g")[0];
  }
  const double ratio = sum_sq / draws / ((r * sigma) * (r * sigma));
  const double secs = Seconds(start);
  const bool pass = clip_failures == 0 && worst_excess <= 1e-12 &&
                    std::abs(ratio - 1.0) < 0.02 && secs < 120.0;
  return {pass, absl::StrFormat(
                    "clip failures %d/10000; max sensitivity - R = %.3g over "
                    "500 pairs; noise variance / (R sigma)^2 = %.4f; %.1f s",
                    clip_failures, worst_excess, ratio, secs)};
}

// ------------------------------------------------------------- criterion 4

struct Centralized {
  const SupernetObjective& obj;
  Batch train;
  Batch val;
  HyperParameters hp;
  NamedTensors arch;
  NamedTensors weights;

  void Step() {
    NamedTensors w_prime = weights;
    w_prime.AddScaled(*obj.GradWeights(train, arch, weights), -hp.xi);
    arch.AddScaled(*obj.GradArch(val, arch, w_prime), -hp.eta);
    weights = std::move(w_prime);
  }
};

std::vector<PartyDataset> Shard(const Batch& train, const Batch& val,
                                std::size_t k) {
  std::vector<PartyDataset> out(k);
  auto cut = [k](const Batch& b, std::size_t part) {
    const std::size_t n = b.size() / k;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = part * n + i;
    return b.Subset(idx);
  };
  for (std::size_t p = 0; p < k; ++p) out[p] = {cut(train, p), cut(val, p)};
  return out;
}

Outcome FederationEquivalence() {
  SupernetObjective obj(Supernet(*CellGraph::FullyConnected(2),
                                 CandidateOpSet::Default(), 3, 3));
  const Supernet& net = obj.supernet();
  RngStream rng = TestRng(1004);
  const Batch train = RandomBatch(64, 3, 3, rng);
  const Batch val = RandomBatch(64, 3, 3, rng);
  std::string detail;
  bool pass = true;
  for (std::uint32_t k : {2u, 4u, 8u}) {
    // Noise-free, clip-free, p = 1. Summed party gradients of equal shards
    // are K times the pooled mean gradient, hence the rates xi K and eta K.
    FederationConfig c;
    c.parties = k;
    c.hp.xi = 0.05;
    c.hp.eta = 0.3;
    c.hp.second_order = false;
    c.clip = {kNoClip, kNoClip};
    c.noise = {0.0, 0.0};
    c.subsample_p = 1.0;
    absl::StatusOr<FederationEngine> engine = FederationEngine::Create(
        obj, c, Shard(train, val, k), net.InitArch(), net.InitWeights(3));
    if (!engine.ok()) return Fail(std::string(engine.status().message()));
    HyperParameters hp = c.hp;
    hp.xi *= k;
    hp.eta *= k;
    Centralized ref{obj, train, val, hp, net.InitArch(), net.InitWeights(3)};
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      if (absl::Status s = engine->Step(); !s.ok()) return Fail(std::string(s.message()));
      ref.Step();
      worst = std::max({worst, SupNorm(engine->server().weights(), ref.weights),
                        SupNorm(engine->server().arch(), ref.arch)});
    }
    pass = pass && worst < 1e-9;
    absl::StrAppend(&detail, "K=", k, " sup ", absl::StrFormat("%.2g", worst), "; ");
  }
  // Replay determinism with noise, subsampling and the look-ahead correction.
  FederationConfig c;
  c.parties = 4;
  c.clip = {0.5, 0.5};
  c.noise = {1.0, 1.0};
  c.batch_size = 4.0;
  c.seed = 5;
  std::vector<std::string> transcripts;
  for (int run = 0; run < 2; ++run) {
    absl::StatusOr<FederationEngine> e = FederationEngine::Create(
        obj, c, Shard(train, val, 4), net.InitArch(), net.InitWeights(3),
        {.keep_transcript = true});
    if (!e.ok()) return Fail(std::string(e.status().message()));
    for (int t = 0; t < 10; ++t) {
      if (absl::Status s = e->Step(); !s.ok()) return Fail(std::string(s.message()));
    }
    std::string all;
    for (const std::string& m : e->transcript()) all += m;
    transcripts.push_back(std::move(all));
  }
  const bool replay = transcripts[0] == transcripts[1] && !transcripts[0].empty();
  absl::StrAppend(&detail, "replay bytes identical: ", replay ? "yes" : "no",
                  " (", transcripts[0].size(), " bytes)");
  return {pass && replay, detail};
}

// ------------------------------------------------------------- criterion 5

double PhiOracle(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<std::size_t> GiftWrapLowerHull(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  std::vector<std::size_t> hull = {0};
  std::size_t cur = 0;
  while (cur + 1 < x.size()) {
    std::size_t best = cur + 1;
    double best_slope = (y[best] - y[cur]) / (x[best] - x[cur]);
    for (std::size_t k = cur + 2; k < x.size(); ++k) {
      const double s = (y[k] - y[cur]) / (x[k] - x[cur]);
      if (s <= best_slope) {
        best = k;
        best_slope = s;
      }
    }
    hull.push_back(best);
    cur = best;
  }
  return hull;
}

Outcome PrivacyGoldenValues() {
  std::vector<std::string> notes;
  bool pass = true;

  const double clt = *CltMu(0.004, 10000, 1.0);
  const double clt_oracle = 0.004 * std::sqrt(10000.0) * std::sqrt(std::exp(1.0) - 1.0);
  const bool clt_ok = std::abs(clt - 0.524333) <= 1e-6 && std::abs(clt - clt_oracle) <= 1e-12;
  pass = pass && clt_ok;
  notes.push_back(absl::StrFormat("clt_mu %.9f", clt));

  // Most powerful test of N(0,1) against N(1,1) at level 0.5 rejects for
  // x > 0; beta is the mass of N(1,1) at or below 0.
  const int n = 1000000;
  RngStream rng(2025, 0, 5, StreamPhase::kTest);
  int accepted = 0;
  for (int i = 0; i < n; ++i) accepted += 1.0 + rng.NextGaussian() <= 0.0;
  const double beta_mc = static_cast<double>(accepted) / n;
  const double g = EvalGMu(1.0, 0.5);
  const double se = std::sqrt(beta_mc * (1.0 - beta_mc) / n);
  const bool g_ok = std::abs(g - 0.1586553) <= 1e-6 && std::abs(g - beta_mc) <= 3.0 * se;
  pass = pass && g_ok;
  notes.push_back(absl::StrFormat("G_1(0.5) %.9f vs MC %.6f (se %.1e)", g, beta_mc, se));

  const double f = EvalFEpsDelta(1.0, 0.0, 0.2);
  const double f_oracle = std::max({0.0, 1.0 - std::exp(1.0) * 0.2, std::exp(-1.0) * 0.8});
  const bool f_ok = std::abs(f - 0.456344) <= 1e-6 && std::abs(f - f_oracle) <= 1e-9;
  pass = pass && f_ok;
  notes.push_back(absl::StrFormat("f_{1,0}(0.2) %.12f", f));

  bool sandwich = true;
  const TradeoffFunction g1 = GaussianTradeoff(1.0);
  const TradeoffFunction id = IdentityTradeoff();
  for (double p : {0.1, 0.5, 0.9}) {
    absl::StatusOr<TradeoffFunction> out = SubsampleOperator(g1, p);
    if (!out.ok()) return Fail(std::string(out.status().message()));
    for (std::size_t i = 0; i < out->size(); ++i) {
      sandwich = sandwich && out->beta(i) >= g1.beta(i) - 1e-12 &&
                 out->beta(i) <= id.beta(i) + 1e-12;
    }
  }
  pass = pass && sandwich;
  notes.push_back(absl::StrCat("sandwich ", sandwich ? "ok" : "violated"));

  RngStream crng(2025, 0, 6, StreamPhase::kTest);
  int hull_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 50 + crng.NextBelow(300);
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = static_cast<double>(i) / static_cast<double>(m - 1);
      y[i] = crng.NextUniform();
    }
    const TradeoffFunction dc = DoubleConjugate(*TradeoffFunction::FromValues(y));
    for (std::size_t v : GiftWrapLowerHull(x, y)) hull_mismatch += dc.beta(v) != y[v];
  }
  pass = pass && hull_mismatch == 0;
  notes.push_back(absl::StrCat("hull vertex mismatches ", hull_mismatch, "/100 curves"));
  return {pass, absl::StrJoin(notes, "; ")};
}

// ------------------------------------------------------------- criterion 6

Outcome AccountantMonotonicity() {
  RngStream rng = TestRng(1006);
  int violations = 0;
  auto composed = [](const PrivacyQuery& q) {
    const PartyPrivacy p = *AccountQuery(q);
    return GdpCompose(p.mu_w, p.mu_a);
  };
  for (int i = 0; i < 10; ++i) {
    PrivacyQuery q;
    q.n_train = 1000 + rng.NextBelow(50000);
    q.n_val = 1000 + rng.NextBelow(50000);
    q.batch_size = 1.0 + std::floor(rng.NextUniform() * 200.0);
    q.batch_size_val = 1.0 + std::floor(rng.NextUniform() * 200.0);
    q.iterations = 1 + rng.NextBelow(20000);
    q.sigma = 0.5 + 3.0 * rng.NextUniform();
    q.tau = 0.5 + 3.0 * rng.NextUniform();
    const PartyPrivacy base = *AccountQuery(q);
    const double base_c = composed(q);
    // Each perturbation must move the mechanism it feeds, and the
    // composition, strictly in the stated direction.
    struct Probe {
      std::function<void(PrivacyQuery&)> apply;
      bool up;
      bool moves_w;
      bool moves_a;
    };
    const std::vector<Probe> probes = {
        {[](PrivacyQuery& x) { x.batch_size += 1.0; }, true, true, false},
        {[](PrivacyQuery& x) { x.batch_size_val += 1.0; }, true, false, true},
        {[](PrivacyQuery& x) { x.iterations += 1; }, true, true, true},
        {[](PrivacyQuery& x) { x.n_train += 1; }, false, true, false},
        {[](PrivacyQuery& x) { x.n_val += 1; }, false, false, true},
        {[](PrivacyQuery& x) { x.sigma *= 1.01; }, false, true, false},
        {[](PrivacyQuery& x) { x.tau *= 1.01; }, false, false, true},
    };
    for (const Probe& probe : probes) {
      PrivacyQuery moved = q;
      probe.apply(moved);
      const PartyPrivacy after = *AccountQuery(moved);
      auto strictly = [&](double before, double now) {
        return probe.up ? now > before : now < before;
      };
      if (probe.moves_w && !strictly(base.mu_w, after.mu_w)) ++violations;
      if (probe.moves_a && !strictly(base.mu_a, after.mu_a)) ++violations;
      if (!strictly(base_c, composed(moved))) ++violations;
    }
  }
  return {violations == 0,
          absl::StrCat("10 random queries x 7 perturbations (B, B_val, T, N_tr, "
                       "N_val, sigma, tau): ", violations, " violations")};
}

// ---------------------------------------------------------- criteria 7 - 9

std::filesystem::path WorkDir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() /
      absl::StrCat("fnas_acceptance_", name, "_", ::getpid());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const SweepCell* FindCell(const SweepResult& r, std::uint32_t k, double v) {
  for (const SweepCell& c : r.cells) {
    if (c.parties == k && c.variance == v) return &c;
  }
  return nullptr;
}

double PooledSd(double a, double b) { return std::sqrt((a * a + b * b) / 2.0); }

Outcome PartyCountTrend() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config;
  config.out_dir = WorkDir("parties").string();
  const std::vector<std::uint32_t> parties = {1, 2, 4, 8};
  std::ostringstream log;
  absl::StatusOr<SweepResult> r =
      CmdSweep(config, SweepSpec{parties, {0.0, 1.0}, 3}, log);
  if (!r.ok()) return Fail(std::string(r.status().message()));
  const double secs = Seconds(start);
  bool complete = true, monotone = true, gap_ok = true;
  std::string detail = "noise-free/DP test error:";
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const SweepCell* nf = FindCell(*r, parties[i], 0.0);
    const SweepCell* dp = FindCell(*r, parties[i], 1.0);
    if (nf == nullptr || dp == nullptr) return Fail("missing sweep cell");
    complete = complete && nf->completed == 3 && dp->completed == 3;
    gap_ok = gap_ok && std::abs(dp->test_error_mean - nf->test_error_mean) <= 0.05;
    if (i > 0) {
      const SweepCell* prev = FindCell(*r, parties[i - 1], 0.0);
      monotone = monotone &&
                 nf->test_error_mean >= prev->test_error_mean -
                                            PooledSd(nf->test_error_sd,
                                                     prev->test_error_sd);
    }
    absl::StrAppend(&detail, absl::StrFormat(" K=%u %.4f/%.4f", parties[i],
                                             nf->test_error_mean,
                                             dp->test_error_mean));
  }
  absl::StrAppend(&detail, absl::StrFormat(
                               "; (a) non-decreasing within 1 pooled sd: %s; (b) "
                               "DP within 5 points: %s; %.0f s",
                               monotone ? "yes" : "no", gap_ok ? "yes" : "no", secs));
  if (!complete) absl::StrAppend(&detail, "; some runs failed");
  std::filesystem::remove_all(config.out_dir);
  return {complete && monotone && gap_ok && secs < 1800.0, detail};
}

Outcome NoiseVarianceTrend() {
  ExperimentConfig config;
  config.out_dir = WorkDir("variance").string();
  const std::uint32_t k = config.federation.parties;
  std::ostringstream log;
  absl::StatusOr<SweepResult> r = CmdSweep(config, SweepSpec{{k}, {0.5, 10.0}, 3}, log);
  if (!r.ok()) return Fail(std::string(r.status().message()));
  const SweepCell* low = FindCell(*r, k, 0.5);
  const SweepCell* high = FindCell(*r, k, 10.0);
  if (low == nullptr || high == nullptr) return Fail("missing sweep cell");
  const double pooled = PooledSd(low->val_error_sd, high->val_error_sd);
  const double margin = high->val_error_mean - low->val_error_mean;
  std::filesystem::remove_all(config.out_dir);
  return {low->completed == 3 && high->completed == 3 && margin > pooled,
          absl::StrFormat("K=%u val error %.4f +- %.4f (variance 0.5) vs %.4f "
                          "+- %.4f (variance 10); margin %.4f vs pooled sd %.4f",
                          k, low->val_error_mean, low->val_error_sd,
                          high->val_error_mean, high->val_error_sd, margin, pooled)};
}

int Run(const std::string& command) {
  const int status = std::system((command + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// Closed form p sqrt(t) sqrt(e^{1/s^2} - 1), computed here independently.
double ClosedFormMu(double p, double t, double s) {
  if (t == 0.0) return 0.0;
  return p * std::sqrt(t) * std::sqrt(std::exp(1.0 / (s * s)) - 1.0);
}

Outcome EndToEndCli() {
  const std::filesystem::path dir = WorkDir("cli");
  const std::string cli = FNAS_CLI_PATH;
  const ExperimentConfig config;  // the defaults the CLI starts from
  const int search = Run(cli + " search --out-dir " + Quote(dir));
  const int augment = Run(cli + " augment --out-dir " + Quote(dir) +
                          " --checkpoint " + Quote(dir / kCheckpointFile));

  // Per-party sizes of the default IID split give the sampling rates.
  absl::StatusOr<DatasetSplits> data = LoadDataset(config);
  if (!data.ok()) return Fail(std::string(data.status().message()));
  absl::StatusOr<std::vector<PartyDataset>> parts =
      PartitionDataset(*data, config.federation.parties, config.label_skew,
                       config.federation.seed);
  if (!parts.ok()) return Fail(std::string(parts.status().message()));
  const FederationConfig& f = config.federation;
  double p_w = 0.0, p_a = 0.0;
  std::size_t min_train = SIZE_MAX, min_val = SIZE_MAX;
  for (const PartyDataset& p : *parts) {
    min_train = std::min(min_train, p.train.size());
    min_val = std::min(min_val, p.val.size());
    p_w = std::max(p_w, f.batch_size / static_cast<double>(p.train.size()));
    p_a = std::max(p_a, f.batch_size / static_cast<double>(p.val.size()));
  }
  const int report = Run(absl::StrCat(
      cli, " privacy-report --B ", FormatDouble(f.batch_size), " --N-tr ",
      min_train, " --N-val ", min_val, " --T ", f.iterations, " --sigma ",
      FormatDouble(f.noise.sigma), " --tau ", FormatDouble(f.noise.tau),
      " --out ", Quote(dir / "privacy_report_cli.txt")));

  int missing = 0;
  for (const char* name : {kMetricsFile, kArchFile, kCheckpointFile, kPrivacyFile,
                           kPrivacyCurveFile}) {
    missing += !std::filesystem::exists(dir / name);
  }

  double worst = 0.0;
  std::size_t rows = 0;
  if (absl::StatusOr<std::string> csv = ReadFile((dir / kMetricsFile).string());
      csv.ok()) {
    std::vector<std::string> lines = absl::StrSplit(*csv, '\n', absl::SkipEmpty());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::vector<std::string> cols = absl::StrSplit(lines[i], ',');
      if (cols.size() != 10) return Fail("malformed metrics row");
      std::uint64_t t = 0;
      if (!absl::SimpleAtoi(cols[0], &t)) return Fail("bad iteration column");
      const bool w_row = cols[1] == "W";
      const double mu_w = *ParseDouble(cols[7]);
      const double mu_a = *ParseDouble(cols[8]);
      const double tt = static_cast<double>(t);
      worst = std::max({worst,
                        std::abs(mu_w - ClosedFormMu(p_w, tt, f.noise.sigma)),
                        std::abs(mu_a - ClosedFormMu(p_a, w_row ? tt - 1.0 : tt,
                                                     f.noise.tau))});
      ++rows;
    }
  }
  const bool pass = search == 0 && augment == 0 && report == 0 && missing == 0 &&
                    rows == 2 * f.iterations && worst <= 1e-12;
  std::filesystem::remove_all(dir);
  return {pass, absl::StrFormat("exit codes search %d, augment %d, privacy-report "
                                "%d; missing outputs %d; %u metrics rows, max mu "
                                "deviation %.2g",
                                search, augment, report, missing, rows, worst)};
}

}  // namespace
}  // namespace fnas

int main(int argc, char** argv) {
  using fnas::Outcome;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, fnas::GradientCorrectness},   {2, fnas::FiniteDifferenceOrder},
      {3, fnas::DpMechanism},           {4, fnas::FederationEquivalence},
      {5, fnas::PrivacyGoldenValues},   {6, fnas::AccountantMonotonicity},
      {7, fnas::PartyCountTrend},           {8, fnas::NoiseVarianceTrend},
      {9, fnas::EndToEndCli},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    if (!selected.empty() && !selected.contains(id)) continue;
    const Outcome o = check();
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

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

#include "fnas/federation/search.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "fnas/dp/rng.h"
#include "fnas/util/format.h"
#include "zlib.h"

namespace fnas {

absl::StatusOr<FederationEngine> FederationEngine::Create(
    const BilevelObjective& objective, const FederationConfig& config,
    std::vector<PartyDataset> data, NamedTensors arch, NamedTensors weights,
    EngineOptions options) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (data.size() != config.parties) {
    return absl::InvalidArgumentError(absl::StrCat(
        "config names ", config.parties, " parties but ", data.size(),
        " datasets were supplied"));
  }
  std::vector<Party> parties;
  parties.reserve(data.size());
  for (std::uint32_t k = 0; k < config.parties; ++k) {
    absl::StatusOr<Party> p = Party::Create(k, std::move(data[k]), objective,
                                            config, arch, weights);
    if (!p.ok()) return p.status();
    parties.push_back(*std::move(p));
  }
  Server server(std::move(arch), std::move(weights), config);
  return FederationEngine(config, std::move(parties), std::move(server),
                          options);
}

void FederationEngine::Record(const std::string& bytes) {
  transcript_crc_ = static_cast<std::uint32_t>(
      crc32(transcript_crc_, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
  if (options_.keep_transcript) transcript_.push_back(bytes);
}

void FederationEngine::Order(std::vector<std::string>& messages,
                             std::uint64_t t, Phase phase) const {
  if (options_.shuffle_delivery_seed == 0) return;
  RngStream rng(options_.shuffle_delivery_seed, static_cast<std::uint32_t>(phase),
                t, StreamPhase::kTest);
  std::shuffle(messages.begin(), messages.end(), rng);
}

absl::Status FederationEngine::RunWeightPhase() {
  const std::uint64_t t = completed_iterations() + 1;
  std::vector<std::string> bus;
  bus.reserve(parties_.size());
  for (Party& p : parties_) {
    absl::StatusOr<std::string> m = p.RunWeightPhase(t);
    if (!m.ok()) return m.status();
    bus.push_back(*std::move(m));
  }
  Order(bus, t, Phase::kWeights);
  for (const std::string& m : bus) Record(m);
  absl::StatusOr<std::string> broadcast = server_.WeightStep(bus);
  if (!broadcast.ok()) return broadcast.status();
  Record(*broadcast);
  for (Party& p : parties_) {
    if (absl::Status s = p.ReceiveWeights(*broadcast); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status FederationEngine::RunArchPhase() {
  const std::uint64_t t = completed_iterations() + 1;
  std::vector<std::string> bus;
  bus.reserve(parties_.size());
  for (Party& p : parties_) {
    absl::StatusOr<std::string> m = p.RunArchPhase(t);
    if (!m.ok()) return m.status();
    bus.push_back(*std::move(m));
  }
  Order(bus, t, Phase::kArch);
  for (const std::string& m : bus) Record(m);
  absl::StatusOr<std::string> broadcast = server_.ArchStep(bus);
  if (!broadcast.ok()) return broadcast.status();
  Record(*broadcast);
  for (Party& p : parties_) {
    if (absl::Status s = p.ReceiveArch(*broadcast); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status FederationEngine::Step() {
  if (absl::Status s = RunWeightPhase(); !s.ok()) return s;
  return RunArchPhase();
}

absl::StatusOr<PrivacyReport> FederationEngine::Privacy(
    std::uint64_t iterations) const {
  PrivacyReport report;
  for (const Party& p : parties_) {
    absl::StatusOr<PartyPrivacy> r =
        AccountQuery(p.privacy_query(iterations), p.id());
    if (!r.ok()) return r.status();
    report.parties.push_back(*std::move(r));
  }
  return report;
}

double FederationEngine::MaxMuWeights(std::uint64_t iterations) const {
  double mu = 0.0;
  for (const Party& p : parties_) {
    mu = std::max(mu, MechanismMu(p.weight_rate(), iterations,
                                  config_.noise.sigma));
  }
  return mu;
}

double FederationEngine::MaxMuArch(std::uint64_t iterations) const {
  double mu = 0.0;
  for (const Party& p : parties_) {
    mu = std::max(mu,
                  MechanismMu(p.arch_rate(), iterations, config_.noise.tau));
  }
  return mu;
}

std::string MetricsRowToCsv(const MetricsRow& r) {
  return absl::StrCat(r.iteration, ",", std::string(PhaseName(r.phase)), ",",
                      FormatDouble(r.train_loss), ",", FormatDouble(r.val_loss),
                      ",", FormatDouble(r.val_error), ",",
                      FormatDouble(r.grad_norm_w), ",",
                      FormatDouble(r.grad_norm_a), ",",
                      FormatDouble(r.mu_w_so_far), ",",
                      FormatDouble(r.mu_a_so_far), ",",
                      FormatDouble(r.wall_ms));
}

double CrossEntropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = logits.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, logits.at(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(logits.at(i, j) - m);
    total += m + std::log(s) - logits.at(i, static_cast<std::size_t>(labels[i]));
  }
  return total / static_cast<double>(n);
}

namespace {

struct Evaluation {
  double train_loss;
  double val_loss;
  double val_error;
};

absl::StatusOr<Evaluation> Evaluate(const Supernet& net, const Batch& train,
                                    const Batch& val, const NamedTensors& arch,
                                    const NamedTensors& weights) {
  Evaluation e{};
  if (train.size() > 0) {
    absl::StatusOr<Tensor> logits = net.Logits(train.features, weights, arch);
    if (!logits.ok()) return logits.status();
    e.train_loss = CrossEntropy(*logits, train.labels);
  }
  if (val.size() > 0) {
    absl::StatusOr<Tensor> logits = net.Logits(val.features, weights, arch);
    if (!logits.ok()) return logits.status();
    e.val_loss = CrossEntropy(*logits, val.labels);
    e.val_error = ClassificationError(*logits, val.labels);
  }
  return e;
}

}  // namespace

absl::StatusOr<SearchResult> RunSearch(const SupernetObjective& objective,
                                       const FederationConfig& config,
                                       std::vector<PartyDataset> data,
                                       const Batch& eval_train,
                                       const Batch& eval_val,
                                       const SearchOptions& options) {
  const Supernet& net = objective.supernet();
  absl::StatusOr<FederationEngine> engine = FederationEngine::Create(
      objective, config, std::move(data), net.InitArch(),
      net.InitWeights(config.seed), options.engine);
  if (!engine.ok()) return engine.status();

  SearchResult result;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  std::vector<double> arch_val_loss;
  const std::size_t w = std::max<std::size_t>(1, options.plateau_window);

  for (std::uint64_t t = 1; t <= config.iterations; ++t) {
    if (absl::Status s = engine->RunWeightPhase(); !s.ok()) return s;
    const Server& server = engine->server();
    absl::StatusOr<Evaluation> e = Evaluate(net, eval_train, eval_val,
                                            server.arch(), server.weights());
    if (!e.ok()) return e.status();
    MetricsRow row{.iteration = t,
                   .phase = Phase::kWeights,
                   .train_loss = e->train_loss,
                   .val_loss = e->val_loss,
                   .val_error = e->val_error,
                   .grad_norm_w = server.last_weight_grad_norm(),
                   .grad_norm_a = 0.0,
                   .mu_w_so_far = engine->MaxMuWeights(t),
                   .mu_a_so_far = engine->MaxMuArch(t - 1),
                   .wall_ms = elapsed_ms()};
    result.metrics.push_back(row);
    if (options.on_row) options.on_row(row);

    if (absl::Status s = engine->RunArchPhase(); !s.ok()) return s;
    e = Evaluate(net, eval_train, eval_val, server.arch(), server.weights());
    if (!e.ok()) return e.status();
    row.phase = Phase::kArch;
    row.train_loss = e->train_loss;
    row.val_loss = e->val_loss;
    row.val_error = e->val_error;
    row.grad_norm_a = server.last_arch_grad_norm();
    row.mu_a_so_far = engine->MaxMuArch(t);
    row.wall_ms = elapsed_ms();
    result.metrics.push_back(row);
    if (options.on_row) options.on_row(row);

    arch_val_loss.push_back(e->val_loss);
    if (!result.plateau && arch_val_loss.size() >= 2 * w) {
      const auto end = arch_val_loss.end();
      const double recent = std::accumulate(end - w, end, 0.0) / w;
      const double before = std::accumulate(end - 2 * w, end - w, 0.0) / w;
      if (before - recent < options.plateau_tolerance * std::abs(before)) {
        result.plateau = true;
        result.plateau_iteration = t;
      }
    }
  }

  result.arch = engine->server().arch();
  result.weights = engine->server().weights();
  absl::StatusOr<DiscreteArchitecture> discrete =
      Discretize(result.arch, net.cell(), net.ops(), config.top_k);
  if (!discrete.ok()) return discrete.status();
  result.discrete = *std::move(discrete);
  absl::StatusOr<PrivacyReport> privacy = engine->Privacy(config.iterations);
  if (!privacy.ok()) return privacy.status();
  result.privacy = *std::move(privacy);
  result.transcript_crc = engine->transcript_crc();
  return result;
}

}  // namespace fnas

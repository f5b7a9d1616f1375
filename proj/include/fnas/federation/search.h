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

#ifndef FNAS_FEDERATION_SEARCH_H_
#define FNAS_FEDERATION_SEARCH_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/bilevel/bilevel.h"
#include "fnas/federation/protocol.h"
#include "fnas/federation/wire.h"
#include "fnas/nas/search_space.h"
#include "fnas/privacy/accountant.h"

namespace fnas {

struct EngineOptions {
  // Nonzero: hand messages to the server in a seeded random order instead of
  // party order.
  std::uint64_t shuffle_delivery_seed = 0;
  // Keep every encoded message and broadcast, in delivery order.
  bool keep_transcript = false;
};

// Drives K parties and the server through the synchronous two-phase rounds.
// Every message and broadcast crosses the in-process bus in encoded form.
class FederationEngine {
 public:
  // Parties start from copies of `arch` and `weights`. `objective` must
  // outlive the engine.
  static absl::StatusOr<FederationEngine> Create(
      const BilevelObjective& objective, const FederationConfig& config,
      std::vector<PartyDataset> data, NamedTensors arch, NamedTensors weights,
      EngineOptions options = {});

  // Phases of iteration completed_iterations() + 1.
  absl::Status RunWeightPhase();
  absl::Status RunArchPhase();
  absl::Status Step();

  const Server& server() const { return server_; }
  const std::vector<Party>& parties() const { return parties_; }
  const FederationConfig& config() const { return config_; }
  std::uint64_t completed_iterations() const {
    return server_.completed_iterations();
  }

  // CRC-32 chained over every byte that crossed the bus.
  std::uint32_t transcript_crc() const { return transcript_crc_; }
  const std::vector<std::string>& transcript() const { return transcript_; }

  // Per-party accounting after `iterations` rounds.
  absl::StatusOr<PrivacyReport> Privacy(std::uint64_t iterations) const;
  // max over parties of the per-phase GDP level after `iterations` rounds.
  double MaxMuWeights(std::uint64_t iterations) const;
  double MaxMuArch(std::uint64_t iterations) const;

 private:
  FederationEngine(FederationConfig config, std::vector<Party> parties,
                   Server server, EngineOptions options)
      : config_(std::move(config)),
        parties_(std::move(parties)),
        server_(std::move(server)),
        options_(options) {}

  void Record(const std::string& bytes);
  void Order(std::vector<std::string>& messages, std::uint64_t t,
             Phase phase) const;

  FederationConfig config_;
  std::vector<Party> parties_;
  Server server_;
  EngineOptions options_;
  std::uint32_t transcript_crc_ = 0;
  std::vector<std::string> transcript_;
};

struct MetricsRow {
  std::uint64_t iteration = 0;
  Phase phase = Phase::kWeights;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_error = 0.0;
  double grad_norm_w = 0.0;
  double grad_norm_a = 0.0;
  double mu_w_so_far = 0.0;
  double mu_a_so_far = 0.0;
  double wall_ms = 0.0;
};

inline constexpr char kMetricsHeader[] =
    "iteration,phase,train_loss,val_loss,val_error,grad_norm_w,grad_norm_a,"
    "mu_w_so_far,mu_a_so_far,wall_ms";
std::string MetricsRowToCsv(const MetricsRow& row);

struct SearchOptions {
  EngineOptions engine;
  // Plateau: the mean A-phase validation loss over the last `plateau_window`
  // iterations improves on the window before it by less than
  // `plateau_tolerance`, relatively.
  std::size_t plateau_window = 10;
  double plateau_tolerance = 1e-3;
  // Called after each row is produced.
  std::function<void(const MetricsRow&)> on_row;
};

struct SearchResult {
  NamedTensors arch;
  NamedTensors weights;
  DiscreteArchitecture discrete;
  std::vector<MetricsRow> metrics;
  PrivacyReport privacy;
  bool plateau = false;
  std::uint64_t plateau_iteration = 0;  // first iteration flagged
  std::uint32_t transcript_crc = 0;
};

// Runs config.iterations rounds from the supernet's seeded initialization,
// evaluating the global model on `eval_train` and `eval_val` after every
// phase, then discretizes A with config.top_k.
absl::StatusOr<SearchResult> RunSearch(const SupernetObjective& objective,
                                       const FederationConfig& config,
                                       std::vector<PartyDataset> data,
                                       const Batch& eval_train,
                                       const Batch& eval_val,
                                       const SearchOptions& options = {});

// Mean cross-entropy of logits [n, C] against labels.
double CrossEntropy(const Tensor& logits, std::span<const int> labels);

}  // namespace fnas

#endif  // FNAS_FEDERATION_SEARCH_H_

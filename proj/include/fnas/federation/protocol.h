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

#ifndef FNAS_FEDERATION_PROTOCOL_H_
#define FNAS_FEDERATION_PROTOCOL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/bilevel/bilevel.h"
#include "fnas/dp/mechanism.h"
#include "fnas/federation/wire.h"
#include "fnas/privacy/accountant.h"

namespace fnas {

enum class Aggregation { kSum, kMean };

struct FederationConfig {
  std::uint32_t parties = 4;
  std::uint64_t iterations = 100;
  HyperParameters hp;
  ClipConfig clip;
  NoiseConfig noise;
  // Expected Poisson batch size B; party k samples with p = B / |D_k| in each
  // phase. A positive subsample_p replaces B and is used for both phases.
  double batch_size = 32.0;
  double subsample_p = 0.0;
  Aggregation aggregation = Aggregation::kSum;
  int top_k = 1;
  std::uint64_t seed = 1;

  absl::Status Validate() const;
  // Clipping and noise both disabled: parties send exact batch gradients.
  bool noise_free() const;

  friend bool operator==(const FederationConfig&,
                         const FederationConfig&) = default;
};

struct PartyDataset {
  Batch train;
  Batch val;
};

// One simulated data holder. Stage order per iteration t is RunWeightPhase(t),
// ReceiveWeights, RunArchPhase(t), ReceiveArch; anything else is a protocol
// error. `objective` must outlive the party.
class Party {
 public:
  static absl::StatusOr<Party> Create(std::uint32_t id, PartyDataset data,
                                      const BilevelObjective& objective,
                                      const FederationConfig& config,
                                      NamedTensors arch, NamedTensors weights);

  std::uint32_t id() const { return id_; }
  const NamedTensors& arch() const { return arch_; }
  const NamedTensors& weights() const { return weights_; }
  const NamedTensors& weights_prime() const { return weights_prime_; }
  // Iteration whose W-step produced W'_k; 0 before the first broadcast.
  std::uint64_t weights_prime_version() const { return w_prime_version_; }
  // W'_k version the most recent A-phase gradient was taken at.
  std::uint64_t last_arch_gradient_version() const {
    return last_arch_version_;
  }
  std::uint64_t completed_iterations() const { return next_iteration_ - 1; }
  const PartyDataset& data() const { return data_; }

  double weight_rate() const { return query_.batch_size / query_.n_train; }
  double arch_rate() const { return query_.val_batch_size() / query_.n_val; }
  // Accounting inputs for `iterations` completed rounds.
  PrivacyQuery privacy_query(std::uint64_t iterations) const;

  // Encoded GradientMessage for the W-phase of iteration t.
  absl::StatusOr<std::string> RunWeightPhase(std::uint64_t t);
  // Applies the W broadcast: W'_k <- W.
  absl::Status ReceiveWeights(std::string_view broadcast);
  absl::StatusOr<std::string> RunArchPhase(std::uint64_t t);
  // Applies the A broadcast: A_k <- A, W_k <- W'_k.
  absl::Status ReceiveArch(std::string_view broadcast);

 private:
  enum class Stage { kWeightPhase, kWeightBroadcast, kArchPhase, kArchBroadcast };

  Party(std::uint32_t id, PartyDataset data, const BilevelObjective& objective,
        const FederationConfig& config, NamedTensors arch,
        NamedTensors weights, PrivacyQuery query);

  absl::Status Expect(Stage stage, std::uint64_t t, std::string_view what) const;
  absl::StatusOr<std::optional<GradientVector>> WeightGradient(std::uint64_t t);
  absl::StatusOr<std::optional<GradientVector>> ArchGradient(std::uint64_t t);

  std::uint32_t id_;
  PartyDataset data_;
  const BilevelObjective* objective_;
  FederationConfig config_;
  PrivacyQuery query_;
  NamedTensors arch_;
  NamedTensors weights_;
  NamedTensors weights_prime_;
  // Training subsample of the current iteration, reused by the second-order
  // correction.
  std::vector<std::size_t> train_indices_;
  Stage stage_ = Stage::kWeightPhase;
  std::uint64_t next_iteration_ = 1;
  std::uint64_t w_prime_version_ = 0;
  std::uint64_t last_arch_version_ = 0;
};

// Holds the only global copy of A and W and applies aggregated steps.
class Server {
 public:
  Server(NamedTensors arch, NamedTensors weights, FederationConfig config);

  const NamedTensors& arch() const { return arch_; }
  const NamedTensors& weights() const { return weights_; }
  std::uint64_t completed_iterations() const { return completed_; }
  // Norms of the most recent aggregates.
  double last_weight_grad_norm() const { return weight_grad_norm_; }
  double last_arch_grad_norm() const { return arch_grad_norm_; }

  // Decodes one message per party for the W-phase of the next iteration,
  // sums the non-empty payloads in party_id order and steps W with rate xi.
  // Returns the encoded W broadcast.
  absl::StatusOr<std::string> WeightStep(std::span<const std::string> messages);
  // As above for A with rate eta.
  absl::StatusOr<std::string> ArchStep(std::span<const std::string> messages);

 private:
  absl::StatusOr<GradientVector> Aggregate(std::span<const std::string> messages,
                                           Phase phase, std::uint64_t t,
                                           const NamedTensors& layout) const;

  NamedTensors arch_;
  NamedTensors weights_;
  FederationConfig config_;
  std::uint64_t completed_ = 0;
  bool weights_stepped_ = false;
  double weight_grad_norm_ = 0.0;
  double arch_grad_norm_ = 0.0;
};

}  // namespace fnas

#endif  // FNAS_FEDERATION_PROTOCOL_H_

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

#include "fnas/federation/protocol.h"

#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "fnas/dp/rng.h"

namespace fnas {
namespace {

std::string_view StageName(int stage) {
  static constexpr std::string_view kNames[] = {
      "W-phase", "W broadcast", "A-phase", "A broadcast"};
  return kNames[stage];
}

absl::Status ProtocolError(std::string message) {
  return absl::FailedPreconditionError(
      absl::StrCat("protocol error: ", message));
}

// Uniforms lie in [0, 1), so p = 1 keeps every index.
std::vector<std::size_t> Sample(std::size_t n, double p, RngStream rng) {
  return PoissonSubsample(n, p, rng);
}

}  // namespace

absl::Status FederationConfig::Validate() const {
  if (parties < 1) return absl::InvalidArgumentError("need at least one party");
  if (absl::Status s = hp.Validate(); !s.ok()) return s;
  if (absl::Status s = clip.Validate(); !s.ok()) return s;
  if (absl::Status s = noise.Validate(); !s.ok()) return s;
  if ((noise.sigma > 0.0 && std::isinf(clip.r_g)) ||
      (noise.tau > 0.0 && std::isinf(clip.r_h))) {
    return absl::InvalidArgumentError(
        "Gaussian noise needs a finite clip bound in the same phase");
  }
  if (subsample_p != 0.0) {
    if (!(subsample_p > 0.0 && subsample_p <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("subsample p must lie in (0, 1], got ", subsample_p));
    }
  } else if (!(batch_size > 0.0) || std::isinf(batch_size)) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch size must be positive, got ", batch_size));
  }
  if (top_k < 1) return absl::InvalidArgumentError("topk must be >= 1");
  return absl::OkStatus();
}

bool FederationConfig::noise_free() const {
  return noise.sigma == 0.0 && noise.tau == 0.0 && std::isinf(clip.r_g) &&
         std::isinf(clip.r_h);
}

// ---------------------------------------------------------------- Party

Party::Party(std::uint32_t id, PartyDataset data,
             const BilevelObjective& objective, const FederationConfig& config,
             NamedTensors arch, NamedTensors weights, PrivacyQuery query)
    : id_(id),
      data_(std::move(data)),
      objective_(&objective),
      config_(config),
      query_(query),
      arch_(std::move(arch)),
      weights_(std::move(weights)) {}

absl::StatusOr<Party> Party::Create(std::uint32_t id, PartyDataset data,
                                    const BilevelObjective& objective,
                                    const FederationConfig& config,
                                    NamedTensors arch, NamedTensors weights) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (data.train.size() == 0 || data.val.size() == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("party ", id, " needs non-empty train and val splits"));
  }
  PrivacyQuery q;
  q.n_train = data.train.size();
  q.n_val = data.val.size();
  if (config.subsample_p > 0.0) {
    q.batch_size = config.subsample_p * static_cast<double>(q.n_train);
    q.batch_size_val = config.subsample_p * static_cast<double>(q.n_val);
  } else {
    q.batch_size = config.batch_size;
    q.batch_size_val = config.batch_size;
  }
  q.sigma = config.noise.sigma;
  q.tau = config.noise.tau;
  if (absl::Status s = q.Validate(); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("party ", id, ": ", s.message()));
  }
  return Party(id, std::move(data), objective, config, std::move(arch),
               std::move(weights), q);
}

PrivacyQuery Party::privacy_query(std::uint64_t iterations) const {
  PrivacyQuery q = query_;
  q.iterations = iterations;
  return q;
}

absl::Status Party::Expect(Stage stage, std::uint64_t t,
                           std::string_view what) const {
  if (stage_ != stage || t != next_iteration_) {
    return ProtocolError(absl::StrCat(
        "party ", id_, " got ", std::string(what), " for iteration ", t,
        " but expects ", std::string(StageName(static_cast<int>(stage_))),
        " of iteration ", next_iteration_));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::optional<GradientVector>> Party::WeightGradient(
    std::uint64_t t) {
  train_indices_ = Sample(data_.train.size(), weight_rate(),
                          RngStream(config_.seed, id_, t,
                                    StreamPhase::kWeightSubsample));
  if (train_indices_.empty()) return std::optional<GradientVector>();
  const Batch batch = data_.train.Subset(train_indices_);
  if (std::isinf(config_.clip.r_g) && config_.noise.sigma == 0.0) {
    absl::StatusOr<GradientVector> g =
        objective_->GradWeights(batch, arch_, weights_);
    if (!g.ok()) return g.status();
    return std::optional<GradientVector>(*std::move(g));
  }
  absl::StatusOr<std::vector<GradientVector>> per_sample =
      objective_->PerSampleGradWeights(batch, arch_, weights_);
  if (!per_sample.ok()) return per_sample.status();
  RngStream noise(config_.seed, id_, t, StreamPhase::kWeightNoise);
  return Privatize(*per_sample, config_.clip.r_g, config_.noise.sigma, noise);
}

absl::StatusOr<std::optional<GradientVector>> Party::ArchGradient(
    std::uint64_t t) {
  const std::vector<std::size_t> val_indices =
      Sample(data_.val.size(), arch_rate(),
             RngStream(config_.seed, id_, t, StreamPhase::kArchSubsample));
  if (val_indices.empty()) return std::optional<GradientVector>();
  const Batch val = data_.val.Subset(val_indices);
  const double bound = config_.clip.r_h;
  const double tau = config_.noise.tau;
  RngStream noise(config_.seed, id_, t, StreamPhase::kArchNoise);

  if (config_.hp.second_order) {
    absl::StatusOr<GradientVector> h;
    if (train_indices_.empty()) {
      // No training examples this round: the look-ahead correction has
      // nothing to differentiate and drops out.
      h = ArchGradientFirstOrder(*objective_, val, arch_, weights_prime_);
    } else {
      h = ArchGradientSecondOrderRelative(
          *objective_, data_.train.Subset(train_indices_), val, arch_,
          weights_, weights_prime_, config_.hp);
    }
    if (!h.ok()) return h.status();
    if (!std::isinf(bound)) {
      h = Clip(*h, bound);
      if (!h.ok()) return h.status();
    }
    if (absl::Status s = AddNoiseAndNormalize(*h, bound, tau, 1.0, noise);
        !s.ok()) {
      return s;
    }
    return std::optional<GradientVector>(*std::move(h));
  }

  if (std::isinf(bound) && tau == 0.0) {
    absl::StatusOr<GradientVector> g =
        ArchGradientFirstOrder(*objective_, val, arch_, weights_prime_);
    if (!g.ok()) return g.status();
    return std::optional<GradientVector>(*std::move(g));
  }
  absl::StatusOr<std::vector<GradientVector>> per_sample =
      objective_->PerSampleGradArch(val, arch_, weights_prime_);
  if (!per_sample.ok()) return per_sample.status();
  return Privatize(*per_sample, bound, tau, noise);
}

absl::StatusOr<std::string> Party::RunWeightPhase(std::uint64_t t) {
  if (absl::Status s = Expect(Stage::kWeightPhase, t, "W-phase request");
      !s.ok()) {
    return s;
  }
  absl::StatusOr<std::optional<GradientVector>> g = WeightGradient(t);
  if (!g.ok()) return g.status();
  GradientMessage m{.party_id = id_, .iteration = t, .phase = Phase::kWeights,
                    .empty = !g->has_value()};
  if (g->has_value()) m.payload = std::move(**g);
  stage_ = Stage::kWeightBroadcast;
  return EncodeMessage(m);
}

absl::Status Party::ReceiveWeights(std::string_view bytes) {
  absl::StatusOr<Broadcast> b = DecodeBroadcast(bytes);
  if (!b.ok()) return b.status();
  if (b->phase != Phase::kWeights) {
    return ProtocolError(absl::StrCat("party ", id_,
                                      " expected a W broadcast, got A"));
  }
  if (absl::Status s = Expect(Stage::kWeightBroadcast, b->iteration,
                              "W broadcast");
      !s.ok()) {
    return s;
  }
  if (absl::Status s = weights_.CheckSameLayout(b->values); !s.ok()) return s;
  weights_prime_ = std::move(b->values);
  w_prime_version_ = b->iteration;
  stage_ = Stage::kArchPhase;
  return absl::OkStatus();
}

absl::StatusOr<std::string> Party::RunArchPhase(std::uint64_t t) {
  if (absl::Status s = Expect(Stage::kArchPhase, t, "A-phase request");
      !s.ok()) {
    return s;
  }
  // Phase discipline: the A gradient is taken at this iteration's W'.
  if (w_prime_version_ != t) {
    return ProtocolError(absl::StrCat("party ", id_, " holds W' of iteration ",
                                      w_prime_version_, " in iteration ", t));
  }
  absl::StatusOr<std::optional<GradientVector>> h = ArchGradient(t);
  if (!h.ok()) return h.status();
  last_arch_version_ = w_prime_version_;
  GradientMessage m{.party_id = id_, .iteration = t, .phase = Phase::kArch,
                    .empty = !h->has_value()};
  if (h->has_value()) m.payload = std::move(**h);
  stage_ = Stage::kArchBroadcast;
  return EncodeMessage(m);
}

absl::Status Party::ReceiveArch(std::string_view bytes) {
  absl::StatusOr<Broadcast> b = DecodeBroadcast(bytes);
  if (!b.ok()) return b.status();
  if (b->phase != Phase::kArch) {
    return ProtocolError(absl::StrCat("party ", id_,
                                      " expected an A broadcast, got W"));
  }
  if (absl::Status s = Expect(Stage::kArchBroadcast, b->iteration,
                              "A broadcast");
      !s.ok()) {
    return s;
  }
  if (absl::Status s = arch_.CheckSameLayout(b->values); !s.ok()) return s;
  arch_ = std::move(b->values);
  weights_ = weights_prime_;
  stage_ = Stage::kWeightPhase;
  ++next_iteration_;
  return absl::OkStatus();
}

// ---------------------------------------------------------------- Server

Server::Server(NamedTensors arch, NamedTensors weights, FederationConfig config)
    : arch_(std::move(arch)),
      weights_(std::move(weights)),
      config_(std::move(config)) {}

absl::StatusOr<GradientVector> Server::Aggregate(
    std::span<const std::string> messages, Phase phase, std::uint64_t t,
    const NamedTensors& layout) const {
  const std::string_view phase_name = PhaseName(phase);
  std::vector<std::optional<GradientMessage>> by_party(config_.parties);
  for (const std::string& bytes : messages) {
    absl::StatusOr<GradientMessage> m = DecodeMessage(bytes);
    if (!m.ok()) return m.status();
    if (m->phase != phase || m->iteration != t) {
      return ProtocolError(absl::StrCat(
          "server expects ", std::string(phase_name), "-phase messages of iteration ", t,
          ", party ", m->party_id, " sent ", std::string(PhaseName(m->phase)),
          "-phase of iteration ", m->iteration));
    }
    if (m->party_id >= config_.parties) {
      return ProtocolError(absl::StrCat("unknown party ", m->party_id, " in ",
                                        std::string(phase_name), "-phase"));
    }
    if (by_party[m->party_id].has_value()) {
      return ProtocolError(absl::StrCat("duplicate ", std::string(phase_name),
                                        "-phase message from party ",
                                        m->party_id));
    }
    if (!m->empty) {
      if (absl::Status s = layout.CheckSameLayout(m->payload); !s.ok()) {
        return ProtocolError(absl::StrCat(
            "party ", m->party_id, " ", std::string(phase_name),
            "-phase payload does not match the global parameters: ",
            s.message()));
      }
    }
    by_party[m->party_id] = *std::move(m);
  }
  GradientVector sum = layout.ZerosLike();
  for (std::uint32_t k = 0; k < config_.parties; ++k) {
    if (!by_party[k].has_value()) {
      return ProtocolError(absl::StrCat("missing ", std::string(phase_name),
                                        "-phase message from party ", k,
                                        " at iteration ", t));
    }
  }
  for (std::uint32_t k = 0; k < config_.parties; ++k) {
    if (!by_party[k]->empty) sum.AddScaled(by_party[k]->payload, 1.0);
  }
  if (config_.aggregation == Aggregation::kMean) {
    sum.Scale(1.0 / static_cast<double>(config_.parties));
  }
  return sum;
}

absl::StatusOr<std::string> Server::WeightStep(
    std::span<const std::string> messages) {
  const std::uint64_t t = completed_ + 1;
  if (weights_stepped_) {
    return ProtocolError(absl::StrCat(
        "server already applied the W-step of iteration ", t));
  }
  absl::StatusOr<GradientVector> g =
      Aggregate(messages, Phase::kWeights, t, weights_);
  if (!g.ok()) return g.status();
  absl::StatusOr<NamedTensors> w = fnas::WeightStep(weights_, *g, config_.hp.xi);
  if (!w.ok()) return w.status();
  weights_ = *std::move(w);
  weight_grad_norm_ = g->L2Norm();
  weights_stepped_ = true;
  return EncodeBroadcast({t, Phase::kWeights, weights_});
}

absl::StatusOr<std::string> Server::ArchStep(
    std::span<const std::string> messages) {
  const std::uint64_t t = completed_ + 1;
  if (!weights_stepped_) {
    return ProtocolError(absl::StrCat(
        "server has not applied the W-step of iteration ", t));
  }
  absl::StatusOr<GradientVector> h = Aggregate(messages, Phase::kArch, t, arch_);
  if (!h.ok()) return h.status();
  absl::StatusOr<NamedTensors> a = fnas::ArchStep(arch_, *h, config_.hp.eta);
  if (!a.ok()) return a.status();
  arch_ = *std::move(a);
  arch_grad_norm_ = h->L2Norm();
  weights_stepped_ = false;
  completed_ = t;
  return EncodeBroadcast({t, Phase::kArch, arch_});
}

}  // namespace fnas

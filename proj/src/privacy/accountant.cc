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

#include "fnas/privacy/accountant.h"

#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "fnas/privacy/tradeoff.h"
#include "fnas/util/format.h"

namespace fnas {
namespace {

constexpr double kEpsilonSamples[] = {0.5, 1.0, 2.0, 4.0};

}  // namespace

absl::StatusOr<double> CltMu(double p, std::uint64_t iterations,
                             double noise_multiplier) {
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling rate must lie in [0, 1], got ", p));
  }
  if (!(noise_multiplier >= 0.0)) {
    return absl::InvalidArgumentError("noise multiplier must be >= 0");
  }
  if (iterations == 0 || p == 0.0) return 0.0;
  if (noise_multiplier == 0.0) {
    return absl::FailedPreconditionError(
        "noise multiplier 0: no DP guarantee");
  }
  const double nu = p * std::sqrt(static_cast<double>(iterations));
  return nu * std::sqrt(std::expm1(1.0 / (noise_multiplier * noise_multiplier)));
}

double GdpCompose(double mu1, double mu2) { return std::hypot(mu1, mu2); }

absl::Status PrivacyQuery::Validate() const {
  if (!(batch_size > 0.0) || !(batch_size_val >= 0.0)) {
    return absl::InvalidArgumentError("batch size must be > 0");
  }
  if (n_train == 0 || n_val == 0) {
    return absl::InvalidArgumentError("dataset sizes must be > 0");
  }
  if (batch_size > static_cast<double>(n_train)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size ", batch_size, " exceeds N_tr = ", n_train));
  }
  if (val_batch_size() > static_cast<double>(n_val)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size ", val_batch_size(), " exceeds N_val = ", n_val));
  }
  if (!(sigma >= 0.0) || !(tau >= 0.0)) {
    return absl::InvalidArgumentError("noise multipliers must be >= 0");
  }
  return absl::OkStatus();
}

double MechanismMu(double p, std::uint64_t iterations,
                   double noise_multiplier) {
  absl::StatusOr<double> mu = CltMu(p, iterations, noise_multiplier);
  if (mu.ok()) return *mu;
  return std::numeric_limits<double>::infinity();
}

absl::StatusOr<PartyPrivacy> AccountQuery(const PrivacyQuery& query,
                                            std::uint32_t party) {
  if (absl::Status s = query.Validate(); !s.ok()) return s;
  PartyPrivacy out;
  out.party = party;
  out.query = query;
  out.mu_w = MechanismMu(query.batch_size / static_cast<double>(query.n_train),
                         query.iterations, query.sigma);
  out.mu_a = MechanismMu(query.val_batch_size() / static_cast<double>(query.n_val),
                         query.iterations, query.tau);
  return out;
}

std::string RenderPrivacyReport(const PrivacyReport& report) {
  std::string out;
  for (const PartyPrivacy& p : report.parties) {
    const PrivacyQuery& q = p.query;
    absl::StrAppend(&out, "party=", p.party, "\n");
    absl::StrAppend(&out, "mu_W=", FormatDouble(p.mu_w), "\n");
    absl::StrAppend(&out, "mu_A=", FormatDouble(p.mu_a), "\n");
    absl::StrAppend(&out, "B=", FormatDouble(q.batch_size), "\n");
    absl::StrAppend(&out, "B_val=", FormatDouble(q.val_batch_size()), "\n");
    absl::StrAppend(&out, "N_tr=", q.n_train, "\n");
    absl::StrAppend(&out, "N_val=", q.n_val, "\n");
    absl::StrAppend(&out, "T=", q.iterations, "\n");
    absl::StrAppend(&out, "sigma=", FormatDouble(q.sigma), "\n");
    absl::StrAppend(&out, "tau=", FormatDouble(q.tau), "\n");
    for (double eps : kEpsilonSamples) {
      absl::StrAppend(&out, "delta_W(eps=", FormatDouble(eps),
                      ")=", FormatDouble(GdpDeltaForEpsilon(p.mu_w, eps)),
                      "\n");
      absl::StrAppend(&out, "delta_A(eps=", FormatDouble(eps),
                      ")=", FormatDouble(GdpDeltaForEpsilon(p.mu_a, eps)),
                      "\n");
    }
  }
  return out;
}

std::string RenderPrivacyCurves(const PrivacyReport& report,
                                std::size_t points) {
  std::string out = "mechanism,alpha,beta\n";
  for (const PartyPrivacy& p : report.parties) {
    for (const auto& [label, mu] :
         {std::pair<const char*, double>{"W", p.mu_w}, {"A", p.mu_a}}) {
      for (std::size_t i = 0; i < points; ++i) {
        const double alpha =
            static_cast<double>(i) / static_cast<double>(points - 1);
        const double beta =
            std::isinf(mu) ? (alpha > 0.0 ? 0.0 : 1.0) : EvalGMu(mu, alpha);
        absl::StrAppend(&out, "party", p.party, "_", label, ",",
                        FormatDouble(alpha), ",", FormatDouble(beta), "\n");
      }
    }
  }
  return out;
}

}  // namespace fnas

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

#ifndef FNAS_PRIVACY_ACCOUNTANT_H_
#define FNAS_PRIVACY_ACCOUNTANT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fnas {

// mu = p sqrt(T) sqrt(e^{1/sigma^2} - 1): the CLT limit of T rounds of a
// Poisson-subsampled Gaussian mechanism. T = 0 or p = 0 gives 0; otherwise
// sigma = 0 is an error.
absl::StatusOr<double> CltMu(double p, std::uint64_t iterations,
                             double noise_multiplier);

// sqrt(mu1^2 + mu2^2).
double GdpCompose(double mu1, double mu2);

// Per-party inputs. B is an expected batch size (p = B / N).
struct PrivacyQuery {
  double batch_size = 0.0;       // B for the weight mechanism
  double batch_size_val = 0.0;   // B for the architecture mechanism; 0: same
  std::uint64_t n_train = 0;
  std::uint64_t n_val = 0;
  std::uint64_t iterations = 0;  // T
  double sigma = 1.0;
  double tau = 1.0;

  double val_batch_size() const {
    return batch_size_val > 0.0 ? batch_size_val : batch_size;
  }
  absl::Status Validate() const;
};

struct PartyPrivacy {
  std::uint32_t party = 0;
  PrivacyQuery query;
  // GDP levels of the weight and architecture compositions. A mechanism run
  // without noise reports +infinity.
  double mu_w = 0.0;
  double mu_a = 0.0;
};

struct PrivacyReport {
  std::vector<PartyPrivacy> parties;
};

// mu_W = CltMu(B / N_tr, T, sigma), mu_A = CltMu(B_val / N_val, T, tau),
// reported separately.
absl::StatusOr<PartyPrivacy> AccountQuery(const PrivacyQuery& query,
                                            std::uint32_t party = 0);

// mu of one mechanism, with +infinity for noiseless runs.
double MechanismMu(double p, std::uint64_t iterations, double noise_multiplier);

// key=value lines, one block per party, plus (eps, delta) samples.
std::string RenderPrivacyReport(const PrivacyReport& report);

// "mechanism,alpha,beta" rows for G_mu_W and G_mu_A of each party.
std::string RenderPrivacyCurves(const PrivacyReport& report,
                                std::size_t points = 101);

}  // namespace fnas

#endif  // FNAS_PRIVACY_ACCOUNTANT_H_

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

#ifndef FNAS_CLI_CONFIG_H_
#define FNAS_CLI_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/cli/dataset.h"
#include "fnas/federation/protocol.h"

namespace fnas {

struct AugmentConfig {
  std::size_t epochs = 20;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 64;

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

// Desk-scale search defaults. The weight rate is sized for per-example
// gradients clipped at R_G = 0.01. The architecture rate keeps the summed
// step of eight parties below the point where the noise-free search
// collapses onto pooling edges.
inline FederationConfig DeskFederation() {
  FederationConfig f;
  f.hp.xi = 5.0;
  f.hp.eta = 0.25;
  return f;
}

struct ExperimentConfig {
  FederationConfig federation = DeskFederation();
  int cell_nodes = 4;  // intermediate nodes of the fully connected cell
  SyntheticDatasetSpec data;
  // Empty: generate from `data`. Otherwise a file written by gen-data.
  std::string dataset_path;
  double label_skew = 0.0;  // Dirichlet concentration; 0 is an IID split
  std::size_t eval_size = 500;  // pooled examples scored per metrics row
  AugmentConfig augment;
  std::string out_dir = "fnas_out";

  absl::Status Validate() const;
  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Assigns one typed key. Unknown keys and malformed values are errors.
absl::Status SetConfigValue(ExperimentConfig& config, std::string_view key,
                            std::string_view value);

// Every key, one "key = value" line each, in a fixed order.
std::string RenderConfig(const ExperimentConfig& config);

// Applies "key = value" lines on top of `base`. Blank lines and lines
// starting with '#' are skipped. The result is validated.
absl::StatusOr<ExperimentConfig> ParseConfig(std::string_view text,
                                             ExperimentConfig base = {});

// "key: description" lines for --help.
std::string ConfigKeysHelp();
std::vector<std::string> ConfigKeys();

}  // namespace fnas

#endif  // FNAS_CLI_CONFIG_H_

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

#ifndef FNAS_CLI_COMMANDS_H_
#define FNAS_CLI_COMMANDS_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/cli/config.h"
#include "fnas/cli/dataset.h"
#include "fnas/federation/search.h"
#include "fnas/nas/search_space.h"
#include "fnas/privacy/accountant.h"

namespace fnas {

// Output file names inside the output directory.
inline constexpr char kMetricsFile[] = "metrics.csv";
inline constexpr char kArchFile[] = "arch.txt";
inline constexpr char kCheckpointFile[] = "checkpoint.bin";
inline constexpr char kPrivacyFile[] = "privacy.txt";
inline constexpr char kPrivacyCurveFile[] = "privacy_curve.csv";
inline constexpr char kConfigFile[] = "config.txt";
inline constexpr char kAugmentFile[] = "augment.txt";
inline constexpr char kSweepFile[] = "sweep.csv";
inline constexpr char kSweepSummaryFile[] = "sweep_summary.csv";

// The config's dataset: read from dataset_path or generated from `data`.
absl::StatusOr<DatasetSplits> LoadDataset(const ExperimentConfig& config);

absl::StatusOr<Supernet> BuildSupernet(const ExperimentConfig& config,
                                       const DatasetSplits& data);

struct SearchRun {
  SearchResult result;
  // Supernet error on the whole pooled validation split after the last
  // iteration.
  double final_val_error = 0.0;
};

// Partitions `data` among the parties and runs the federated search.
absl::StatusOr<SearchRun> SearchOnData(
    const ExperimentConfig& config, const DatasetSplits& data,
    std::function<void(const MetricsRow&)> on_row = {});

struct AugmentResult {
  double train_error = 0.0;
  double test_error = 0.0;
  double test_loss = 0.0;
  std::size_t parameters = 0;
};

// Trains the discrete network from a fresh seeded initialization on train
// and val together with momentum SGD under a cosine learning-rate decay, then
// scores the test split.
absl::StatusOr<AugmentResult> AugmentOnData(const ExperimentConfig& config,
                                            const DiscreteArchitecture& arch,
                                            const DatasetSplits& data);

// search: runs the search and writes metrics.csv, arch.txt, checkpoint.bin,
// privacy.txt, privacy_curve.csv and config.txt into config.out_dir.
absl::StatusOr<SearchRun> CmdSearch(const ExperimentConfig& config,
                                    std::ostream& log);

// augment: retrains the checkpoint's architecture and writes augment.txt.
absl::StatusOr<AugmentResult> CmdAugment(const ExperimentConfig& config,
                                         const std::string& checkpoint_path,
                                         std::ostream& out);

// privacy-report: prints the report and writes it to `out_path` if set.
absl::StatusOr<PrivacyReport> CmdPrivacyReport(const PrivacyQuery& query,
                                               const std::string& out_path,
                                               std::ostream& out);

// Each cell sets sigma = tau = sqrt(variance); variance 0 is noise-free.
// Clip bounds are left as configured.
struct SweepSpec {
  std::vector<std::uint32_t> parties;
  std::vector<double> variances;
  std::size_t seeds = 3;  // run seeds config.seed, config.seed + 1, ...
};

struct SweepRun {
  std::uint32_t parties = 0;
  double variance = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double val_error = 0.0;
  double test_error = 0.0;
  double mu_w = 0.0;
  double mu_a = 0.0;
  double seconds = 0.0;
};

struct SweepCell {
  std::uint32_t parties = 0;
  double variance = 0.0;
  std::size_t completed = 0;
  double val_error_mean = 0.0;
  double val_error_sd = 0.0;
  double test_error_mean = 0.0;
  double test_error_sd = 0.0;
  double mu_w = 0.0;
  double mu_a = 0.0;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepCell> cells;
};

// The config with one sweep cell's parties, noise and seed applied.
ExperimentConfig SweepCellConfig(const ExperimentConfig& base,
                                 std::uint32_t parties, double variance,
                                 std::uint64_t seed);

// sweep: one search and one augment per (cell, seed). A failing run is
// recorded and the sweep continues. Writes sweep.csv and sweep_summary.csv.
absl::StatusOr<SweepResult> CmdSweep(const ExperimentConfig& config,
                                     const SweepSpec& spec, std::ostream& log);

// gen-data: writes the generated dataset to `path`.
absl::Status CmdGenData(const ExperimentConfig& config, const std::string& path,
                        std::ostream& out);

// Sample mean and standard deviation (n - 1 divisor; 0 for n < 2).
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};
MeanSd Summarize(const std::vector<double>& values);

}  // namespace fnas

#endif  // FNAS_CLI_COMMANDS_H_

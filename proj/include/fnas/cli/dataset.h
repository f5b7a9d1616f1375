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

#ifndef FNAS_CLI_DATASET_H_
#define FNAS_CLI_DATASET_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"
#include "fnas/federation/protocol.h"

namespace fnas {

enum class Generator { kGaussianMixture, kMoons };

std::string_view GeneratorName(Generator g);
absl::StatusOr<Generator> GeneratorFromName(std::string_view name);

struct SyntheticDatasetSpec {
  Generator generator = Generator::kGaussianMixture;
  std::size_t dim = 16;
  int classes = 4;
  std::size_t per_class = 2000;
  // Gaussian mixture: class means sit at distance `margin` from the origin
  // along orthonormal directions. Moons: scale of the two arcs.
  double margin = 2.0;
  // Isotropic Gaussian noise standard deviation added to every feature.
  double noise = 1.0;
  // Per class; the remainder is the test split.
  double train_fraction = 0.5;
  double val_fraction = 0.25;
  std::uint64_t seed = 7;

  absl::Status Validate() const;
  friend bool operator==(const SyntheticDatasetSpec&,
                         const SyntheticDatasetSpec&) = default;
};

struct DatasetSplits {
  int num_classes = 0;
  Batch train;
  Batch val;
  Batch test;

  std::size_t dim() const { return train.dim(); }
};

// Deterministic in the spec. Splits are stratified per class and disjoint;
// each split is shuffled.
absl::StatusOr<DatasetSplits> GenerateDataset(const SyntheticDatasetSpec& spec);

// The unit vectors the mixture's class means lie along, row c for class c.
absl::StatusOr<Tensor> MixtureDirections(const SyntheticDatasetSpec& spec);

// Splits train and val among `parties`. label_skew = 0 deals a seeded random
// permutation into near-equal contiguous shards; label_skew = a > 0 draws
// each class's party shares from Dirichlet(a). Every party must receive at
// least one example of each split.
absl::StatusOr<std::vector<PartyDataset>> PartitionDataset(
    const DatasetSplits& data, std::uint32_t parties, double label_skew,
    std::uint64_t seed);

// "FNDATA1", u32 classes, tensor block {train,val,test}/{x,y}, CRC-32.
std::string EncodeDataset(const DatasetSplits& data);
absl::StatusOr<DatasetSplits> DecodeDataset(std::string_view bytes);

}  // namespace fnas

#endif  // FNAS_CLI_DATASET_H_

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

#ifndef FNAS_CLI_CHECKPOINT_H_
#define FNAS_CLI_CHECKPOINT_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"

namespace fnas {

struct Checkpoint {
  NamedTensors tensors;  // W and A together, keyed by parameter name
  std::string arch_text;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// "DPFNAS1", tensor block, u32 text length, text, u32 CRC-32 of everything
// between the header and the CRC.
std::string EncodeCheckpoint(const Checkpoint& checkpoint);
absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view bytes);

absl::Status WriteFile(const std::string& path, std::string_view contents);
absl::StatusOr<std::string> ReadFile(const std::string& path);

}  // namespace fnas

#endif  // FNAS_CLI_CHECKPOINT_H_

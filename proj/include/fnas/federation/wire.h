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

#ifndef FNAS_FEDERATION_WIRE_H_
#define FNAS_FEDERATION_WIRE_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "fnas/autodiff/tensor.h"

namespace fnas {

enum class Phase : std::uint8_t { kWeights = 0, kArch = 1 };

std::string_view PhaseName(Phase phase);  // "W" or "A"

// One party's privatized gradient for one phase of one iteration. The
// payload is a named gradient collection and nothing else; the server checks
// its layout against the global parameters.
struct GradientMessage {
  std::uint32_t party_id = 0;
  std::uint64_t iteration = 0;
  Phase phase = Phase::kWeights;
  bool empty = false;  // the Poisson subsample drew no examples
  GradientVector payload;

  friend bool operator==(const GradientMessage&,
                         const GradientMessage&) = default;
};

// Global parameters sent to every party after a server step.
struct Broadcast {
  std::uint64_t iteration = 0;
  Phase phase = Phase::kWeights;
  NamedTensors values;

  friend bool operator==(const Broadcast&, const Broadcast&) = default;
};

inline constexpr std::string_view kMessageMagic = "FNMSG1";
inline constexpr std::string_view kBroadcastMagic = "FNBRD1";

// u32 count, then per tensor in canonical order: u32 name length, name bytes,
// u32 rank, u64 dims, f64 values; all little-endian.
std::string EncodeTensors(const NamedTensors& tensors);
// Decodes one tensor block from the front of `bytes` and advances it.
absl::StatusOr<NamedTensors> DecodeTensors(std::string_view& bytes);

// zlib CRC-32 of `bytes`.
std::uint32_t Crc32(std::string_view bytes);

// FNMSG1, u32 party, u64 iteration, u8 phase, u8 empty, tensor block,
// u32 CRC of the tensor block.
std::string EncodeMessage(const GradientMessage& message);
absl::StatusOr<GradientMessage> DecodeMessage(std::string_view bytes);

// FNBRD1, u64 iteration, u8 phase, tensor block, u32 CRC of the tensor block.
std::string EncodeBroadcast(const Broadcast& broadcast);
absl::StatusOr<Broadcast> DecodeBroadcast(std::string_view bytes);

// Little-endian primitives shared with the checkpoint codec.
void PutU8(std::string& out, std::uint8_t v);
void PutU32(std::string& out, std::uint32_t v);
void PutU64(std::string& out, std::uint64_t v);
absl::StatusOr<std::uint8_t> GetU8(std::string_view& in);
absl::StatusOr<std::uint32_t> GetU32(std::string_view& in);
absl::StatusOr<std::uint64_t> GetU64(std::string_view& in);

}  // namespace fnas

#endif  // FNAS_FEDERATION_WIRE_H_

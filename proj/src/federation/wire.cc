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

#include "fnas/federation/wire.h"

#include <bit>
#include <cstring>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "zlib.h"

namespace fnas {
namespace {

// Refuses dimension products that could not possibly fit in the input, so
// a corrupt header cannot trigger a huge allocation.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

absl::Status Truncated(std::string_view what) {
  return absl::DataLossError(absl::StrCat("truncated input reading ", std::string(what)));
}

absl::Status ExpectMagic(std::string_view& in, std::string_view magic) {
  if (in.substr(0, magic.size()) != magic) {
    return absl::DataLossError(absl::StrCat("bad header, expected ", std::string(magic)));
  }
  in.remove_prefix(magic.size());
  return absl::OkStatus();
}

absl::Status CheckCrc(std::string_view block, std::string_view& in) {
  absl::StatusOr<std::uint32_t> stored = GetU32(in);
  if (!stored.ok()) return stored.status();
  const std::uint32_t actual = Crc32(block);
  if (*stored != actual) {
    return absl::DataLossError(absl::StrCat("CRC mismatch: stored ", *stored,
                                            ", computed ", actual));
  }
  if (!in.empty()) {
    return absl::DataLossError(
        absl::StrCat(in.size(), " trailing bytes after CRC"));
  }
  return absl::OkStatus();
}

absl::StatusOr<Phase> ToPhase(std::uint8_t v) {
  if (v > 1) return absl::DataLossError(absl::StrCat("unknown phase ", v));
  return static_cast<Phase>(v);
}

}  // namespace

std::string_view PhaseName(Phase phase) {
  return phase == Phase::kWeights ? "W" : "A";
}

void PutU8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

absl::StatusOr<std::uint8_t> GetU8(std::string_view& in) {
  if (in.empty()) return Truncated("u8");
  const auto v = static_cast<std::uint8_t>(in[0]);
  in.remove_prefix(1);
  return v;
}

absl::StatusOr<std::uint32_t> GetU32(std::string_view& in) {
  if (in.size() < 4) return Truncated("u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[i])) << (8 * i);
  }
  in.remove_prefix(4);
  return v;
}

absl::StatusOr<std::uint64_t> GetU64(std::string_view& in) {
  if (in.size() < 8) return Truncated("u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in[i])) << (8 * i);
  }
  in.remove_prefix(8);
  return v;
}

std::uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string EncodeTensors(const NamedTensors& tensors) {
  std::string out;
  PutU32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    PutU32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    PutU32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) PutU64(out, d);
    for (double v : t.values()) PutU64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

absl::StatusOr<NamedTensors> DecodeTensors(std::string_view& in) {
  absl::StatusOr<std::uint32_t> count = GetU32(in);
  if (!count.ok()) return count.status();
  NamedTensors out;
  for (std::uint32_t k = 0; k < *count; ++k) {
    absl::StatusOr<std::uint32_t> len = GetU32(in);
    if (!len.ok()) return len.status();
    if (in.size() < *len) return Truncated("tensor name");
    std::string name(in.substr(0, *len));
    in.remove_prefix(*len);
    if (out.Contains(name)) {
      return absl::DataLossError(absl::StrCat("duplicate tensor '", name, "'"));
    }
    absl::StatusOr<std::uint32_t> rank = GetU32(in);
    if (!rank.ok()) return rank.status();
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint32_t r = 0; r < *rank; ++r) {
      absl::StatusOr<std::uint64_t> d = GetU64(in);
      if (!d.ok()) return d.status();
      if (*d != 0 && elements > kMaxElements / *d) {
        return absl::DataLossError(
            absl::StrCat("tensor '", name, "' is implausibly large"));
      }
      elements *= *d;
      shape.push_back(static_cast<std::size_t>(*d));
    }
    if (in.size() / 8 < elements) return Truncated(absl::StrCat("'", name, "'"));
    std::vector<double> values(elements);
    for (double& v : values) v = std::bit_cast<double>(*GetU64(in));
    absl::StatusOr<Tensor> t = Tensor::Create(std::move(shape), std::move(values));
    if (!t.ok()) {
      return absl::DataLossError(
          absl::StrCat("tensor '", name, "': ", t.status().message()));
    }
    out.Set(name, *std::move(t));
  }
  return out;
}

std::string EncodeMessage(const GradientMessage& message) {
  std::string out(kMessageMagic);
  PutU32(out, message.party_id);
  PutU64(out, message.iteration);
  PutU8(out, static_cast<std::uint8_t>(message.phase));
  PutU8(out, message.empty ? 1 : 0);
  const std::string block =
      EncodeTensors(message.empty ? NamedTensors() : message.payload);
  out.append(block);
  PutU32(out, Crc32(block));
  return out;
}

absl::StatusOr<GradientMessage> DecodeMessage(std::string_view in) {
  if (absl::Status s = ExpectMagic(in, kMessageMagic); !s.ok()) return s;
  GradientMessage m;
  absl::StatusOr<std::uint32_t> party = GetU32(in);
  if (!party.ok()) return party.status();
  absl::StatusOr<std::uint64_t> iteration = GetU64(in);
  if (!iteration.ok()) return iteration.status();
  absl::StatusOr<std::uint8_t> phase = GetU8(in);
  if (!phase.ok()) return phase.status();
  absl::StatusOr<std::uint8_t> empty = GetU8(in);
  if (!empty.ok()) return empty.status();
  if (*empty > 1) return absl::DataLossError("empty flag must be 0 or 1");
  absl::StatusOr<Phase> ph = ToPhase(*phase);
  if (!ph.ok()) return ph.status();
  const std::string_view block_start = in;
  absl::StatusOr<NamedTensors> payload = DecodeTensors(in);
  if (!payload.ok()) return payload.status();
  const std::string_view block =
      block_start.substr(0, block_start.size() - in.size());
  if (absl::Status s = CheckCrc(block, in); !s.ok()) return s;
  if (*empty == 1 && !payload->empty()) {
    return absl::DataLossError("empty-flagged message carries a payload");
  }
  m.party_id = *party;
  m.iteration = *iteration;
  m.phase = *ph;
  m.empty = *empty == 1;
  m.payload = *std::move(payload);
  return m;
}

std::string EncodeBroadcast(const Broadcast& broadcast) {
  std::string out(kBroadcastMagic);
  PutU64(out, broadcast.iteration);
  PutU8(out, static_cast<std::uint8_t>(broadcast.phase));
  const std::string block = EncodeTensors(broadcast.values);
  out.append(block);
  PutU32(out, Crc32(block));
  return out;
}

absl::StatusOr<Broadcast> DecodeBroadcast(std::string_view in) {
  if (absl::Status s = ExpectMagic(in, kBroadcastMagic); !s.ok()) return s;
  absl::StatusOr<std::uint64_t> iteration = GetU64(in);
  if (!iteration.ok()) return iteration.status();
  absl::StatusOr<std::uint8_t> phase = GetU8(in);
  if (!phase.ok()) return phase.status();
  absl::StatusOr<Phase> ph = ToPhase(*phase);
  if (!ph.ok()) return ph.status();
  const std::string_view block_start = in;
  absl::StatusOr<NamedTensors> values = DecodeTensors(in);
  if (!values.ok()) return values.status();
  const std::string_view block =
      block_start.substr(0, block_start.size() - in.size());
  if (absl::Status s = CheckCrc(block, in); !s.ok()) return s;
  return Broadcast{*iteration, *ph, *std::move(values)};
}

}  // namespace fnas

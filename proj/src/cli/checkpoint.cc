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

#include "fnas/cli/checkpoint.h"

#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "fnas/federation/wire.h"

namespace fnas {
namespace {

constexpr std::string_view kCheckpointMagic = "DPFNAS1";

}  // namespace

std::string EncodeCheckpoint(const Checkpoint& c) {
  std::string body = EncodeTensors(c.tensors);
  PutU32(body, static_cast<std::uint32_t>(c.arch_text.size()));
  body += c.arch_text;
  std::string out(kCheckpointMagic);
  out += body;
  PutU32(out, Crc32(body));
  return out;
}

absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view in) {
  if (in.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    return absl::DataLossError("not a checkpoint (bad header)");
  }
  in.remove_prefix(kCheckpointMagic.size());
  if (in.size() < 4) return absl::DataLossError("truncated checkpoint");
  const std::string_view body = in.substr(0, in.size() - 4);
  std::string_view tail = in.substr(in.size() - 4);
  const std::uint32_t stored = *GetU32(tail);
  const std::uint32_t actual = Crc32(body);
  if (stored != actual) {
    return absl::DataLossError(absl::StrCat(
        "checkpoint CRC mismatch: stored ", stored, ", computed ", actual));
  }
  std::string_view cursor = body;
  absl::StatusOr<NamedTensors> tensors = DecodeTensors(cursor);
  if (!tensors.ok()) return tensors.status();
  absl::StatusOr<std::uint32_t> len = GetU32(cursor);
  if (!len.ok()) return len.status();
  if (cursor.size() != *len) {
    return absl::DataLossError("checkpoint architecture block has wrong length");
  }
  return Checkpoint{*std::move(tensors), std::string(cursor)};
}

absl::Status WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  f.close();
  if (!f) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace fnas

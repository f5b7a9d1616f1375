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

#ifndef FNAS_UTIL_FORMAT_H_
#define FNAS_UTIL_FORMAT_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace fnas {

// Shortest decimal text that parses back to the same double; "inf", "-inf"
// and "nan" for non-finite values.
std::string FormatDouble(double v);

// Inverse of FormatDouble; rejects trailing garbage.
absl::StatusOr<double> ParseDouble(std::string_view text);

}  // namespace fnas

#endif  // FNAS_UTIL_FORMAT_H_

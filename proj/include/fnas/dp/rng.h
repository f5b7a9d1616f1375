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

#ifndef FNAS_DP_RNG_H_
#define FNAS_DP_RNG_H_

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace fnas {

// Named coordinates of a random stream. Every draw is a pure function of
// (seed, party, iteration, phase, draw index), so parallel parties can never
// perturb each other's randomness.
enum class StreamPhase : std::uint32_t {
  kWeightSubsample = 0,
  kWeightNoise = 1,
  kArchSubsample = 2,
  kArchNoise = 3,
  kInit = 16,
  kData = 17,
  kPartition = 18,
  kAugment = 19,
  kTest = 31,
};

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t party = 0;
  std::uint64_t iteration = 0;
  StreamPhase phase = StreamPhase::kTest;
};

// Philox4x32-10 keyed by the stream coordinates; the draw index is the
// counter. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(const StreamKey& key);
  RngStream(std::uint64_t seed, std::uint32_t party, std::uint64_t iteration,
            StreamPhase phase)
      : RngStream(StreamKey{seed, party, iteration, phase}) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return NextU64(); }
  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double NextUniform();
  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double NextGaussian();
  // Uniform integer in [0, n).
  std::uint64_t NextBelow(std::uint64_t n);

  // Number of Philox blocks generated so far.
  std::uint64_t blocks() const { return counter_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> coord_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// 64-bit FNV-1a; stable across platforms, used to derive per-name streams.
std::uint64_t StableHash(std::string_view text);

}  // namespace fnas

#endif  // FNAS_DP_RNG_H_

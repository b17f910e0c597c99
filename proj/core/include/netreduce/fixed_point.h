/* Copyright 2026 The NetReduce Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NETREDUCE_FIXED_POINT_H_
#define NETREDUCE_FIXED_POINT_H_

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace netreduce {

// Default number of fraction bits used by end-hosts when converting
// gradients to switch words.
inline constexpr int kDefaultFractionBits = 16;
inline constexpr int kMaxFractionBits = 30;

// A 32-bit two's-complement fixed-point word. The scale 2^-f is a per-run
// constant and is not carried by the word itself.
struct FixedWord {
  int32_t raw = 0;

  friend constexpr bool operator==(FixedWord, FixedWord) = default;
  friend constexpr auto operator<=>(FixedWord, FixedWord) = default;
};

inline constexpr FixedWord kFixedMax{std::numeric_limits<int32_t>::max()};
inline constexpr FixedWord kFixedMin{std::numeric_limits<int32_t>::min()};

// Converts `x` to a word with `fraction_bits` fraction bits, rounding to
// nearest (ties to even) and clamping to the 32-bit range.
absl::StatusOr<FixedWord> Quantize(double x, int fraction_bits);

double Dequantize(FixedWord w, int fraction_bits);

// Exact integer sum clamped to [INT32_MIN, INT32_MAX].
constexpr FixedWord SaturatingAdd(FixedWord a, FixedWord b) {
  const int64_t sum = static_cast<int64_t>(a.raw) + b.raw;
  if (sum > std::numeric_limits<int32_t>::max()) return kFixedMax;
  if (sum < std::numeric_limits<int32_t>::min()) return kFixedMin;
  return FixedWord{static_cast<int32_t>(sum)};
}

// acc[i] = SaturatingAdd(acc[i], in[i]). Sizes must match.
void AccumulateInto(std::span<FixedWord> acc, std::span<const FixedWord> in);

// Payload words travel on the wire as big-endian 32-bit integers.
std::vector<uint8_t> EncodePayload(std::span<const FixedWord> words);
absl::StatusOr<std::vector<FixedWord>> DecodePayload(
    std::span<const uint8_t> bytes);

}  // namespace netreduce

#endif  // NETREDUCE_FIXED_POINT_H_

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

#include "netreduce/fixed_point.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"

namespace netreduce {

absl::StatusOr<FixedWord> Quantize(double x, int fraction_bits) {
  if (fraction_bits < 0 || fraction_bits > kMaxFractionBits) {
    return absl::InvalidArgumentError(
        absl::StrFormat("fraction bits %d outside [0, %d]", fraction_bits,
                        kMaxFractionBits));
  }
  if (!std::isfinite(x)) {
    return absl::InvalidArgumentError("cannot quantize a non-finite value");
  }
  // ldexp is exact; nearbyint honours the default round-half-even mode.
  const double scaled = std::nearbyint(std::ldexp(x, fraction_bits));
  if (scaled >= static_cast<double>(kFixedMax.raw)) return kFixedMax;
  if (scaled <= static_cast<double>(kFixedMin.raw)) return kFixedMin;
  return FixedWord{static_cast<int32_t>(scaled)};
}

double Dequantize(FixedWord w, int fraction_bits) {
  return std::ldexp(static_cast<double>(w.raw), -fraction_bits);
}

void AccumulateInto(std::span<FixedWord> acc, std::span<const FixedWord> in) {
  const size_t n = std::min(acc.size(), in.size());
  for (size_t i = 0; i < n; ++i) acc[i] = SaturatingAdd(acc[i], in[i]);
}

std::vector<uint8_t> EncodePayload(std::span<const FixedWord> words) {
  std::vector<uint8_t> out;
  out.reserve(words.size() * 4);
  for (FixedWord w : words) {
    const auto u = static_cast<uint32_t>(w.raw);
    out.push_back(static_cast<uint8_t>(u >> 24));
    out.push_back(static_cast<uint8_t>(u >> 16));
    out.push_back(static_cast<uint8_t>(u >> 8));
    out.push_back(static_cast<uint8_t>(u));
  }
  return out;
}

absl::StatusOr<std::vector<FixedWord>> DecodePayload(
    std::span<const uint8_t> bytes) {
  if (bytes.size() % 4 != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "payload of %d bytes is not a whole number of words", bytes.size()));
  }
  std::vector<FixedWord> out(bytes.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    const uint32_t u = (uint32_t{bytes[4 * i]} << 24) |
                       (uint32_t{bytes[4 * i + 1]} << 16) |
                       (uint32_t{bytes[4 * i + 2]} << 8) |
                       uint32_t{bytes[4 * i + 3]};
    out[i].raw = static_cast<int32_t>(u);
  }
  return out;
}

}  // namespace netreduce

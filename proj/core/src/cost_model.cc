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

#include "netreduce/cost_model.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include "absl/strings/str_format.h"

namespace netreduce {
namespace {

double Log2(int64_t n) { return std::log2(static_cast<double>(n)); }

absl::Status CheckSingleNetwork(const CostParams& p) {
  if (p.gpus < 2) {
    return absl::InvalidArgumentError(
        absl::StrFormat("P must be >= 2, got %d", p.gpus));
  }
  if (!(p.bandwidth > 0.0)) {
    return absl::InvalidArgumentError("B must be positive");
  }
  if (!(p.tensor_bytes >= 0.0)) {
    return absl::InvalidArgumentError("M must be non-negative");
  }
  if (!(p.alpha >= 0.0)) {
    return absl::InvalidArgumentError("alpha must be non-negative");
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateCostParams(const CostParams& p) {
  if (p.gpus < 2) {
    return absl::InvalidArgumentError(
        absl::StrFormat("P must be >= 2, got %d", p.gpus));
  }
  if (p.gpus_per_machine < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("n must be >= 1, got %d", p.gpus_per_machine));
  }
  if (p.gpus % p.gpus_per_machine != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "P (%d) must be a multiple of n (%d)", p.gpus, p.gpus_per_machine));
  }
  if (!(p.bw_intra > 0.0) || !(p.bw_inter > 0.0)) {
    return absl::InvalidArgumentError("B_intra and B_inter must be positive");
  }
  if (!(p.tensor_bytes >= 0.0)) {
    return absl::InvalidArgumentError("M must be non-negative");
  }
  if (!(p.alpha >= 0.0)) {
    return absl::InvalidArgumentError("alpha must be non-negative");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> RingTime(const CostParams& p) {
  if (auto s = CheckSingleNetwork(p); !s.ok()) return s;
  const double P = static_cast<double>(p.gpus);
  return 2.0 * (P - 1.0) * p.alpha +
         (2.0 * (P - 1.0) / P) * (p.tensor_bytes / p.bandwidth);
}

absl::StatusOr<double> NetReduceTime(const CostParams& p) {
  if (auto s = CheckSingleNetwork(p); !s.ok()) return s;
  return p.alpha + p.tensor_bytes / p.bandwidth;
}

absl::StatusOr<double> DeltaSingle(const CostParams& p) {
  if (auto s = CheckSingleNetwork(p); !s.ok()) return s;
  const double P = static_cast<double>(p.gpus);
  return (2.0 * P - 3.0) * p.alpha +
         ((P - 2.0) / P) * (p.tensor_bytes / p.bandwidth);
}

absl::StatusOr<double> FlatRingTime(const CostParams& p) {
  if (auto s = ValidateCostParams(p); !s.ok()) return s;
  const double P = static_cast<double>(p.gpus);
  return 2.0 * (P - 1.0) * p.alpha +
         2.0 * ((P - 1.0) / P) * (p.tensor_bytes / p.bw_inter);
}

absl::StatusOr<double> TencentTime(const CostParams& p) {
  if (auto s = ValidateCostParams(p); !s.ok()) return s;
  if (!std::has_single_bit(static_cast<uint64_t>(p.gpus_per_machine))) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "hierarchical all-reduce model needs n to be a power of two, got %d",
        p.gpus_per_machine));
  }
  const double P = static_cast<double>(p.gpus);
  const double n = static_cast<double>(p.gpus_per_machine);
  const double lg = Log2(p.gpus_per_machine);
  const double a_coeff = (n * n + 3.0 * n * lg - 3.0 * n + 2.0 * P) / n;
  const double m_coeff =
      (4.0 * (n - 1.0) * P * p.bw_inter + 2.0 * (P - n) * n * p.bw_intra) /
      (n * P * p.bw_intra * p.bw_inter);
  return a_coeff * p.alpha + m_coeff * p.tensor_bytes;
}

absl::StatusOr<double> HierarchicalNetReduceTime(const CostParams& p) {
  if (auto s = ValidateCostParams(p); !s.ok()) return s;
  const double n = static_cast<double>(p.gpus_per_machine);
  const double m_coeff = (2.0 * (n - 1.0) * p.bw_inter + n * p.bw_intra) /
                         (n * p.bw_intra * p.bw_inter);
  return (2.0 * n - 1.0) * p.alpha + m_coeff * p.tensor_bytes;
}

absl::StatusOr<double> DeltaTrNh(const CostParams& p) {
  if (auto s = ValidateCostParams(p); !s.ok()) return s;
  if (!std::has_single_bit(static_cast<uint64_t>(p.gpus_per_machine))) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "hierarchical all-reduce model needs n to be a power of two, got %d",
        p.gpus_per_machine));
  }
  const double P = static_cast<double>(p.gpus);
  const double n = static_cast<double>(p.gpus_per_machine);
  const double a_coeff = 2.0 * P / n + 3.0 * Log2(p.gpus_per_machine) - n - 2.0;
  const double m_coeff =
      ((P - 2.0 * n) * n * p.bw_intra + 2.0 * (n - 1.0) * P * p.bw_inter) /
      (n * P * p.bw_intra * p.bw_inter);
  return a_coeff * p.alpha + m_coeff * p.tensor_bytes;
}

absl::StatusOr<AffineInM> DeltaFrNhCoefficients(const CostParams& p) {
  if (auto s = ValidateCostParams(p); !s.ok()) return s;
  const double P = static_cast<double>(p.gpus);
  const double n = static_cast<double>(p.gpus_per_machine);
  AffineInM c;
  c.intercept = (2.0 * P - 2.0 * n - 1.0) * p.alpha;
  c.slope =
      ((P - 2.0) * n * p.bw_intra - 2.0 * (n - 1.0) * P * p.bw_inter) /
      (n * P * p.bw_intra * p.bw_inter);
  return c;
}

absl::StatusOr<double> DeltaFrNh(const CostParams& p) {
  auto c = DeltaFrNhCoefficients(p);
  if (!c.ok()) return c.status();
  return c->intercept + c->slope * p.tensor_bytes;
}

absl::StatusOr<double> RatioCondition(int64_t gpus, int64_t gpus_per_machine) {
  if (gpus <= 2) {
    return absl::InvalidArgumentError(
        absl::StrFormat("ratio condition needs P > 2, got %d", gpus));
  }
  if (gpus_per_machine < 2 || gpus <= gpus_per_machine) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ratio condition needs P > n >= 2, got P=%d n=%d", gpus,
        gpus_per_machine));
  }
  const double P = static_cast<double>(gpus);
  return 2.0 * P / (P - 2.0);
}

absl::StatusOr<std::optional<double>> CrossoverTensorSize(const CostParams& p) {
  auto c = DeltaFrNhCoefficients(p);
  if (!c.ok()) return c.status();
  if (c->slope >= 0.0) return std::optional<double>();
  return std::optional<double>(-c->intercept / c->slope);
}

double WindowQuotient(const WindowParams& w) {
  return (w.rtt * w.port_rate) /
         (static_cast<double>(w.msg_len) * static_cast<double>(w.pkt_size));
}

absl::StatusOr<int64_t> MinWindow(const WindowParams& w) {
  if (!(w.rtt >= 0.0) || !(w.port_rate > 0.0) || w.msg_len <= 0 ||
      w.pkt_size <= 0) {
    return absl::InvalidArgumentError(
        "window parameters must be positive (rtt may be zero)");
  }
  const double n = std::ceil(WindowQuotient(w));
  return std::max<int64_t>(1, static_cast<int64_t>(n));
}

}  // namespace netreduce

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

#ifndef NETREDUCE_COST_MODEL_H_
#define NETREDUCE_COST_MODEL_H_

#include <cstdint>
#include <optional>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace netreduce {

// Parameters of the communication cost models. SI units throughout:
// bytes, bytes/second and seconds.
struct CostParams {
  int64_t gpus = 2;              // P
  int64_t gpus_per_machine = 1;  // n
  double tensor_bytes = 0.0;     // M
  double bandwidth = 1.0;        // B, single network (n = 1 models)
  double bw_intra = 1.0;         // B_intra
  double bw_inter = 1.0;         // B_inter
  double alpha = 0.0;            // per-message latency

  // H = P / n.
  int64_t machines() const { return gpus / gpus_per_machine; }
};

absl::Status ValidateCostParams(const CostParams& p);

// Ring all-reduce on a single network: 2(P-1)a + 2(P-1)/P * M/B.
absl::StatusOr<double> RingTime(const CostParams& p);
// In-network aggregation on a single network: a + M/B.
absl::StatusOr<double> NetReduceTime(const CostParams& p);
// RingTime - NetReduceTime in closed form: (2P-3)a + (P-2)/P * M/B.
absl::StatusOr<double> DeltaSingle(const CostParams& p);

// Flat ring over all P GPUs, bounded by the inter-machine links.
absl::StatusOr<double> FlatRingTime(const CostParams& p);
// Three-phase hierarchical all-reduce (reduce, inter-ring all-reduce,
// broadcast). Requires n to be a power of two.
absl::StatusOr<double> TencentTime(const CostParams& p);
// Intra scatter-reduce, n parallel in-network rings, intra all-gather.
absl::StatusOr<double> HierarchicalNetReduceTime(const CostParams& p);
// TencentTime - HierarchicalNetReduceTime in closed form.
absl::StatusOr<double> DeltaTrNh(const CostParams& p);
// FlatRingTime - HierarchicalNetReduceTime in closed form.
absl::StatusOr<double> DeltaFrNh(const CostParams& p);

// Coefficients of DeltaFrNh, which is affine in M: alpha_term + m_coeff * M.
struct AffineInM {
  double intercept = 0.0;
  double slope = 0.0;
};
absl::StatusOr<AffineInM> DeltaFrNhCoefficients(const CostParams& p);

// Sufficient bandwidth ratio B_intra/B_inter for hierarchical NetReduce to
// beat the flat ring: 2P / (P - 2).
absl::StatusOr<double> RatioCondition(int64_t gpus, int64_t gpus_per_machine);

// Tensor size at which the flat ring and hierarchical NetReduce cost the
// same. nullopt when hierarchical NetReduce wins for every M.
absl::StatusOr<std::optional<double>> CrossoverTensorSize(const CostParams& p);

struct WindowParams {
  double rtt = 0.0;        // seconds
  double port_rate = 1.0;  // bytes/second
  int64_t msg_len = 1;     // packets per message
  int64_t pkt_size = 1;    // bytes per packet
};

// (rtt * port_rate) / (msg_len * pkt_size), before rounding.
double WindowQuotient(const WindowParams& w);
// Smallest N >= 1 with N * msg_len * pkt_size >= rtt * port_rate.
absl::StatusOr<int64_t> MinWindow(const WindowParams& w);

}  // namespace netreduce

#endif  // NETREDUCE_COST_MODEL_H_

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

#ifndef NETREDUCE_EXPERIMENT_H_
#define NETREDUCE_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "netreduce/cost_model.h"
#include "netreduce/netsim.h"

namespace netreduce {

enum class ExperimentMode { kModel, kSimulate, kSweep, kValidate };
enum class SweepAxis { kNone, kTensorBytes, kGpus, kAlpha, kGpusPerMachine,
                       kBwIntra };
enum class SweepScale { kLinear, kLog, kPow2 };

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kModel;
  Topology topology = Topology::kSingleSwitch;

  int64_t gpus = 4;              // P
  int64_t gpus_per_machine = 1;  // n
  double tensor_bytes = 16e6;    // M
  double alpha = 1e-6;
  double bandwidth = 12.5e9;     // B
  double bw_intra = 15.75e9;
  double bw_inter = 12.5e9;

  int window = 2;         // N
  int msg_len = 170;      // packets per message
  int pkt_size = 1024;    // bytes per packet in the window bound
  int pmtu = 1024;

  double loss_rate = 0.0;
  uint64_t seed = 1;
  double propagation = 1e-6;
  double accel_latency = 3e-6;
  // Zero uses bw_inter.
  double link_bandwidth = 0.0;
  int leaves = 1;
  int fraction_bits = 16;
  uint32_t base_psn = 0;
  uint64_t event_cap = 50'000'000;
  bool trace = false;
  double tolerance = 0.05;
  int threads = 0;  // zero: hardware concurrency

  SweepAxis sweep_axis = SweepAxis::kNone;
  std::vector<double> sweep_values;
  std::optional<double> sweep_start;
  std::optional<double> sweep_stop;
  int sweep_count = 0;
  SweepScale sweep_scale = SweepScale::kLinear;

  std::string out;  // empty or "-" writes to stdout
};

// Applies one `key = value` setting.
absl::Status ApplySetting(ExperimentConfig& c, absl::string_view key,
                          absl::string_view value);
// Parses key-value text: one `key = value` per line, '#' starts a comment.
absl::Status ParseConfigText(ExperimentConfig& c, absl::string_view text);
absl::Status LoadConfigFile(ExperimentConfig& c, const std::string& path);

absl::Status ValidateExperimentConfig(const ExperimentConfig& c);

// Sweep points in order; a single point (the configured value) when no axis
// is set.
absl::StatusOr<std::vector<double>> SweepPoints(const ExperimentConfig& c);
// Model and simulation parameters with the sweep axis set to `value`.
CostParams CostParamsAt(const ExperimentConfig& c, double value);
SimConfig SimConfigAt(const ExperimentConfig& c, double value);

inline constexpr absl::string_view kModelCsvHeader =
    "sweep_value,t_flat_ring_s,t_tencent_s,t_hier_netreduce_s,"
    "delta_fr_nh_s,delta_tr_nh_s,crossover_bytes,sim_time_s";

// One CSV row (without newline). `sim_time` fills the last column.
absl::StatusOr<std::string> ModelRow(const CostParams& p, double sweep_value,
                                     std::optional<double> sim_time);

struct ExperimentResult {
  std::string csv;
  // False when a validation run fails its checks.
  bool pass = true;
  // Extra named outputs (trace files), written next to `out`.
  std::vector<std::pair<std::string, std::string>> side_outputs;
};

absl::StatusOr<ExperimentResult> RunModel(const ExperimentConfig& c);
absl::StatusOr<ExperimentResult> RunSweep(const ExperimentConfig& c);
absl::StatusOr<ExperimentResult> RunSimulate(const ExperimentConfig& c);
absl::StatusOr<ExperimentResult> RunValidate(const ExperimentConfig& c);
absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& c);

// Link goodput seen by payload: bandwidth * pmtu / (pmtu + header stack).
double PayloadGoodput(double link_bandwidth, int pmtu);

struct SumCheck {
  uint64_t words = 0;
  uint64_t mismatches = 0;
};
// Compares every host's result with the clamped 64-bit sum of all inputs.
SumCheck CheckExactSums(const Simulation& sim);

}  // namespace netreduce

#endif  // NETREDUCE_EXPERIMENT_H_

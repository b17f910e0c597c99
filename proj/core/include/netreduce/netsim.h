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

#ifndef NETREDUCE_NETSIM_H_
#define NETREDUCE_NETSIM_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "netreduce/accelerator.h"
#include "netreduce/endhost.h"
#include "netreduce/fixed_point.h"
#include "netreduce/protocol.h"

namespace netreduce {

struct LinkStats {
  uint64_t transmitted = 0;
  uint64_t delivered = 0;
  uint64_t dropped = 0;
  uint64_t bytes = 0;
  uint64_t payload_bytes = 0;
};

// Unidirectional FIFO link with serialisation, propagation delay and
// independent per-packet loss.
class Link {
 public:
  struct Result {
    // Time the last bit leaves the sender.
    double departure = 0.0;
    // Absent when the packet is lost.
    std::optional<double> arrival;
  };

  Link(std::string name, double bandwidth, double propagation,
       double loss_rate, uint64_t seed);

  // Queues `pkt` at time `t`. Serialisation starts once the link is free.
  Result Transmit(const Packet& pkt, double t);

  // Extra drop decision consulted after the random loss draw.
  void set_drop_filter(std::function<bool(const Packet&)> filter) {
    drop_filter_ = std::move(filter);
  }

  const std::string& name() const { return name_; }
  const LinkStats& stats() const { return stats_; }
  double free_at() const { return free_at_; }
  double bandwidth() const { return bandwidth_; }

 private:
  std::string name_;
  double bandwidth_;
  double propagation_;
  double loss_rate_;
  std::mt19937_64 rng_;
  double free_at_ = 0.0;
  LinkStats stats_;
  std::function<bool(const Packet&)> drop_filter_;
};

// Uniform draw in [0, 1) from the top 53 bits of one generator output.
double UnitUniform(std::mt19937_64& rng);

// 64-bit FNV-1a.
uint64_t Fnv1a(absl::string_view s);

struct PacketDelivery {
  int node = 0;
  Packet packet;
};

struct TimerFire {
  int host = 0;
  int ring = 0;
  uint32_t msg_id = 0;
  uint64_t generation = 0;
};

// The host NIC may put its next packet on the uplink.
struct NicReady {
  int host = 0;
};

using SimEvent = std::variant<PacketDelivery, TimerFire, NicReady>;

// Time-ordered event queue; ties resolve in insertion order.
class EventQueue {
 public:
  void Push(double time, SimEvent event);
  // Requires !empty().
  std::pair<double, SimEvent> Pop();
  bool empty() const { return heap_.empty(); }
  size_t size() const { return heap_.size(); }

 private:
  struct Entry {
    double time;
    uint64_t seq;
    // Mutable so Pop can move the payload out of the heap top.
    mutable SimEvent event;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  uint64_t next_seq_ = 0;
};

enum class Topology { kSingleSwitch, kSpineLeaf };

struct SimConfig {
  Topology topology = Topology::kSingleSwitch;
  // Machines (H). Each runs one worker per ring.
  int hosts = 4;
  // Rings per machine (n); each ring carries tensor_bytes / rings.
  int rings = 1;
  // Spine-leaf only; hosts must divide evenly.
  int leaves = 1;
  int window = 2;
  // Bytes contributed by each machine.
  uint64_t tensor_bytes = 1 << 20;
  int msg_packets = 170;
  int pmtu_bytes = 1024;
  double link_bandwidth = 12.5e9;
  double propagation = 1e-6;
  double accel_latency = 3e-6;
  double loss_rate = 0.0;
  uint64_t seed = 1;
  int fraction_bits = kDefaultFractionBits;
  uint32_t base_psn = 0;
  // Zero selects ten analytic round-trip times.
  double retransmit_timeout = 0.0;
  uint64_t event_cap = 50'000'000;
  // Records host events and accelerator decisions.
  bool trace = false;
};

absl::Status ValidateSimConfig(const SimConfig& c);

// Round-trip estimate for one message: serialisation of the message, the
// store-and-forward hops to the successor and the ACK path back.
double AnalyticMessageRtt(const SimConfig& c);

struct LinkReport {
  std::string name;
  LinkStats stats;
};

struct SimReport {
  std::vector<double> host_completion_s;
  double completion_s = 0.0;
  std::vector<LinkReport> links;
  // Payload bytes each host put on its uplink.
  std::vector<uint64_t> host_uplink_payload_bytes;
  uint64_t retransmissions = 0;
  uint64_t timeouts = 0;
  uint64_t events = 0;
  AcceleratorStats accelerator;
  size_t stash_residual = 0;
  size_t max_in_flight = 0;
};

// metric,entity,value rows.
std::string SimReportToCsv(const SimReport& r);

struct HostEvent {
  double time = 0.0;
  int host = 0;
  std::string event;
  uint32_t msg_id = 0;
  uint32_t psn = 0;
};

struct AcceleratorTraceRow {
  double time = 0.0;
  std::string switch_name;
  AcceleratorTraceRecord record;
};

std::string HostEventsToCsv(const std::vector<HostEvent>& events);
std::string AcceleratorTraceToCsv(const std::vector<AcceleratorTraceRow>& rows);

// Deterministic per-(seed, host, ring) input tensor: `words` values drawn
// uniformly from [-1, 1) and quantised.
std::vector<FixedWord> MakeHostInput(uint64_t seed, int host, int ring,
                                     size_t words, int fraction_bits);

// Addressing plan shared by the simulators.
uint32_t HostIp(int host);
uint32_t LeafIp(int leaf);
uint32_t SpineIp();
uint64_t HostMac(int host);
uint64_t LeafMac(int leaf);
uint64_t SpineMac();
uint32_t SendQp(int host, int ring, int rings);
uint32_t RecvQp(int host, int ring, int rings);

// Packet-level simulation of in-network aggregation over one single-switch
// or spine-leaf fabric.
class Simulation {
 public:
  static absl::StatusOr<std::unique_ptr<Simulation>> Create(SimConfig config);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs to quiescence. Fails if a worker errs, the event cap is hit, or any
  // message is left without a result or acknowledgement.
  absl::Status Run();

  const SimConfig& config() const { return config_; }
  const SimReport& report() const { return report_; }
  const Worker& worker(int host, int ring) const;
  const std::vector<FixedWord>& HostInput(int host, int ring) const;
  const std::vector<FixedWord>& HostResult(int host, int ring) const;
  size_t words_per_ring() const { return words_per_ring_; }

  const std::vector<HostEvent>& event_log() const { return event_log_; }
  const std::vector<AcceleratorTraceRow>& accel_trace() const {
    return accel_trace_;
  }
  int num_switches() const { return static_cast<int>(switches_.size()); }
  const Accelerator& accelerator(int i) const;

  // Installs `filter` on every link; it sees the link name and the packet.
  void set_drop_filter(
      std::function<bool(const std::string&, const Packet&)> filter);

 private:
  class HostPort;
  struct SwitchNode;
  // Per-host send scheduler: acknowledgements and control packets go ahead
  // of queued data, one packet per uplink slot.
  struct Nic {
    std::deque<Packet> control;
    std::deque<Packet> data;
    bool scheduled = false;
    double predicted_free = 0.0;
  };
  struct Hop {
    Link* link = nullptr;
    int to = -1;
  };

  explicit Simulation(SimConfig config);
  absl::Status Build();
  Link& AddLink(const std::string& name);
  absl::Status Deliver(int node, Packet pkt);
  absl::Status OnSwitch(int index, Packet pkt);
  absl::Status OnHost(int host, Packet pkt);
  // Returns the departure time.
  double SendOn(const Hop& hop, Packet pkt, double t);
  // Queues a packet at the host NIC. Returns its expected departure time.
  double NicEnqueue(int host, Packet pkt);
  void OnNicReady(int host);
  std::optional<Hop> Route(const SwitchNode& sw, uint32_t dst_ip) const;
  std::string StuckDiagnostic() const;
  void Finalise();

  SimConfig config_;
  size_t words_per_ring_ = 0;
  double now_ = 0.0;
  EventQueue queue_;
  std::vector<std::unique_ptr<Link>> links_;
  std::vector<Hop> host_uplink_;
  std::vector<Nic> nics_;
  // Node id of each host's attachment switch.
  std::vector<int> host_switch_;
  std::vector<std::unique_ptr<SwitchNode>> switches_;
  std::vector<std::vector<std::unique_ptr<HostPort>>> ports_;
  std::vector<std::vector<std::unique_ptr<Worker>>> workers_;
  std::vector<HostEvent> event_log_;
  std::vector<AcceleratorTraceRow> accel_trace_;
  SimReport report_;
};

struct RingAllReduceConfig {
  int hosts = 4;
  uint64_t tensor_bytes = 1 << 20;
  int pmtu_bytes = 1024;
  double link_bandwidth = 12.5e9;
  double propagation = 1e-6;
  double switch_latency = 3e-6;
  uint64_t seed = 1;
  int fraction_bits = kDefaultFractionBits;
};

struct RingAllReduceReport {
  double completion_s = 0.0;
  std::vector<uint64_t> host_uplink_payload_bytes;
  std::vector<std::vector<FixedWord>> inputs;
  std::vector<std::vector<FixedWord>> results;
};

// Reference ring all-reduce (reduce-scatter then all-gather) over a star of
// hosts around a plain switch, loss-free.
absl::StatusOr<RingAllReduceReport> RunRingAllReduce(
    const RingAllReduceConfig& c);

}  // namespace netreduce

#endif  // NETREDUCE_NETSIM_H_

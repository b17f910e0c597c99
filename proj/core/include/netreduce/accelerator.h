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

#ifndef NETREDUCE_ACCELERATOR_H_
#define NETREDUCE_ACCELERATOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/container/flat_hash_set.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "netreduce/fixed_point.h"
#include "netreduce/header_manager.h"
#include "netreduce/protocol.h"

namespace netreduce {

enum class PacketClass {
  kFirstAggregation,
  kNonFirstAggregation,
  kPassthrough,
};

absl::string_view PacketClassName(PacketClass c);

struct Lut1Entry {
  ConnectionKey key;
  uint16_t ring_id = 0;
  uint16_t host_id = 0;
};

struct Lut2Entry {
  ConnectionKey key;
  uint32_t psn0 = 0;
  uint16_t msg_len = 0;
  uint32_t msg_id = 0;
};

// Where a packet sits in its ring's aggregation window.
struct Recovered {
  uint16_t ring_id = 0;
  uint16_t host_id = 0;
  uint32_t msg_id = 0;
  uint16_t offset = 0;
  uint16_t msg_len = 0;
};

// Two-level lookup: LUT#1 maps a connection to {ring, host}; LUT#2 maps a
// connection and PSN to the message whose range [PSN0, PSN0 + MsgLen - 1]
// contains it.
class HeaderRecoveryTable {
 public:
  // LUT#1 holds rings * hosts_per_ring entries; LUT#2 keeps at most `window`
  // live messages per connection.
  HeaderRecoveryTable(int rings, int hosts_per_ring, int window);

  const Lut1Entry* FindConnection(const ConnectionKey& key) const;
  const Lut2Entry* FindMessage(const ConnectionKey& key, uint32_t psn) const;

  // Idempotently records a first packet. Assigns the next free host id of the
  // ring on first sight of `key`. LUT#2 keeps the connection's messages newer
  // than (highest msg_id seen) - window; older first packets are not
  // recorded.
  absl::StatusOr<Lut1Entry> RecordFirst(const ConnectionKey& key,
                                        const NetReduceHeader& header,
                                        uint32_t psn);

  size_t lut1_size() const { return lut1_.size(); }
  size_t lut2_size() const { return lut2_live_; }
  size_t lut1_capacity() const { return lut1_capacity_; }
  size_t lut2_capacity() const { return lut1_capacity_ * window_; }

 private:
  size_t lut1_capacity_;
  int hosts_per_ring_;
  size_t window_;
  absl::flat_hash_map<ConnectionKey, Lut1Entry> lut1_;
  absl::flat_hash_map<ConnectionKey, uint32_t> max_msg_;
  absl::flat_hash_map<uint16_t, uint16_t> next_host_id_;
  absl::flat_hash_map<ConnectionKey, std::vector<Lut2Entry>> lut2_;
  size_t lut2_live_ = 0;
};

enum class SetResult { kNewlySet, kDuplicate };

// Per-ring arrival states: hosts rows by (window + 1) * msg_len columns,
// grouped into window + 1 message slots.
class ArrivalBitmap {
 public:
  ArrivalBitmap(int hosts, int window, int msg_len);

  int hosts() const { return hosts_; }
  int slots() const { return slots_; }
  int msg_len() const { return msg_len_; }
  size_t columns() const { return static_cast<size_t>(slots_) * msg_len_; }

  int Slot(uint32_t msg_id) const {
    return static_cast<int>(msg_id % static_cast<uint32_t>(slots_));
  }
  size_t Column(uint32_t msg_id, int offset) const {
    return static_cast<size_t>(Slot(msg_id)) * msg_len_ + offset;
  }
  // Column that a newly-set arrival at (msg_id, offset) clears.
  size_t PairedColumn(uint32_t msg_id, int offset) const {
    return static_cast<size_t>((Slot(msg_id) + 1) % slots_) * msg_len_ +
           offset;
  }

  bool Get(int host, size_t column) const {
    return bits_[static_cast<size_t>(host) * columns() + column];
  }

  struct Update {
    SetResult result = SetResult::kNewlySet;
    size_t column = 0;
    size_t cleared_column = 0;
    // The paired bit was 1 before the clear.
    bool cleared_was_set = false;
  };
  // Sets [host, Column(msg_id, offset)]. A newly-set arrival also clears the
  // same host's bit in the next slot, which belongs to message msg_id - N,
  // unless `clear_paired` is false.
  Update Set(int host, uint32_t msg_id, int offset, bool clear_paired = true);

  bool ColumnFull(size_t column) const;
  bool ColumnClear(size_t column) const;

 private:
  int hosts_;
  int slots_;
  int msg_len_;
  std::vector<bool> bits_;
};

// Aggregated payloads addressed like ArrivalBitmap columns.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(size_t columns) : records_(columns) {}

  void Store(size_t column, std::vector<FixedWord> payload) {
    records_[column] = std::move(payload);
  }
  void Clear(size_t column) { records_[column].reset(); }
  const std::vector<FixedWord>* Load(size_t column) const {
    return records_[column] ? &*records_[column] : nullptr;
  }

 private:
  std::vector<std::optional<std::vector<FixedWord>>> records_;
};

enum class AcceleratorRole {
  // Single-switch aggregation; results go straight back to the workers.
  kTor,
  // First level of two-level aggregation.
  kLeaf,
  // Second level; its ring members are leaves.
  kSpine,
};

struct AcceleratorOptions {
  AcceleratorRole role = AcceleratorRole::kTor;
  SwitchAddress self;
  int window = 2;
  // Largest MsgLen a ring may use.
  int max_msg_len = 1;
  // Rings sharing this accelerator (n).
  int rings = 1;
  // Bitmap rows per ring: workers (ToR), local workers (leaf) or leaves
  // (spine).
  int hosts_per_ring = 1;
  // Sources whose tagged traffic is aggregated. Empty accepts any source.
  std::vector<uint32_t> member_ips;

  // Leaf only.
  HeaderManagerOptions header;
  // Receive QPs of the workers under this leaf, per ring.
  std::map<uint16_t, std::vector<uint32_t>> local_destination_qps;
};

struct AcceleratorStats {
  uint64_t packets_in = 0;
  uint64_t passthrough = 0;
  uint64_t consumed = 0;
  uint64_t aggregations = 0;
  uint64_t history_replays = 0;
  uint64_t duplicate_discards = 0;
  // New-message arrivals refused because the column still held live state.
  uint64_t early_discards = 0;
  uint64_t stale_discards = 0;
  // Non-first packets whose message is unknown to LUT#2.
  uint64_t unrecoverable_discards = 0;
  // A column aggregated twice within one epoch.
  uint64_t exactly_once_violations = 0;
  // A paired clear erased a bit whose column was not yet aggregated.
  uint64_t live_clear_violations = 0;
  uint64_t upstream_sent = 0;
  uint64_t upstream_resends = 0;
  uint64_t stash_controls = 0;
  uint64_t restores = 0;
  uint64_t missing_stash = 0;
  uint64_t stash_bypassed = 0;

  AcceleratorStats& operator+=(const AcceleratorStats& o);
};

struct AcceleratorTraceRecord {
  PacketClass klass = PacketClass::kPassthrough;
  std::optional<Recovered> where;
  absl::string_view action;
};

// Switch-attached aggregation engine: parser/classifier, header recovery,
// arrival bitmap with history replay, payload aggregation and, on leaves
// and spines, header management for two-level aggregation.
class Accelerator {
 public:
  explicit Accelerator(AcceleratorOptions options);

  Accelerator(const Accelerator&) = delete;
  Accelerator& operator=(const Accelerator&) = delete;

  // Entry point: returns the packets to forward, in emission order.
  absl::StatusOr<std::vector<Packet>> Process(Packet pkt);

  PacketClass Classify(const Packet& pkt) const;
  absl::StatusOr<Recovered> Recover(const Packet& pkt);
  ArrivalBitmap::Update SetState(uint16_t ring_id, uint16_t host_id,
                                 uint32_t msg_id, uint16_t offset);
  absl::StatusOr<std::vector<Packet>> OnAggregationPacket(
      Packet pkt, const Recovered& where);

  const AcceleratorStats& stats() const { return stats_; }
  const HeaderRecoveryTable& luts() const { return luts_; }
  const HeaderManager& header_manager() const { return header_manager_; }
  const AcceleratorOptions& options() const { return options_; }
  // nullptr until the ring has seen traffic.
  const ArrivalBitmap* bitmap(uint16_t ring_id) const;
  const HistoryBuffer* history(uint16_t ring_id) const;

  void set_tracer(std::function<void(const AcceleratorTraceRecord&)> tracer) {
    tracer_ = std::move(tracer);
  }

 private:
  struct Column {
    int64_t epoch = -1;  // msg_id currently owning the column
    bool complete = false;
    bool global_known = false;  // leaf: spine result received
    uint16_t count = 0;
    uint16_t msg_len = 0;
    std::vector<FixedWord> sum;
    std::vector<std::optional<StashedHeaders>> pending;
    std::optional<Packet> upstream;  // leaf: aggregate sent to the spine
  };
  struct RingState {
    RingState(int hosts, int window, int msg_len)
        : bitmap(hosts, window, msg_len),
          history(bitmap.columns()),
          columns(bitmap.columns()) {}
    ArrivalBitmap bitmap;
    HistoryBuffer history;
    std::vector<Column> columns;
  };
  struct UpstreamRef {
    uint16_t ring_id;
    size_t column;
    uint32_t msg_id;
  };

  absl::StatusOr<RingState*> Ring(uint16_t ring_id);
  bool IsMember(uint32_t ip) const;
  bool TwoLevelLeaf() const;
  void Emit(std::vector<Packet>& out, const StashedHeaders& headers,
            const std::vector<FixedWord>& payload) const;
  void EmitColumnResult(std::vector<Packet>& out, Column& col,
                        const Recovered& where, size_t column);
  absl::StatusOr<std::vector<Packet>> OnSpineResult(Packet pkt);
  void Trace(PacketClass klass, const std::optional<Recovered>& where,
             absl::string_view action) const;

  AcceleratorOptions options_;
  HeaderRecoveryTable luts_;
  HeaderManager header_manager_;
  absl::flat_hash_set<uint32_t> members_;
  std::map<uint16_t, RingState> rings_;
  std::map<std::pair<uint32_t, uint32_t>, UpstreamRef> upstream_pending_;
  absl::flat_hash_set<uint32_t> local_destination_qp_set_;
  AcceleratorStats stats_;
  std::function<void(const AcceleratorTraceRecord&)> tracer_;
};

}  // namespace netreduce

#endif  // NETREDUCE_ACCELERATOR_H_

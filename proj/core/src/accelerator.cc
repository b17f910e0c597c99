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

#include "netreduce/accelerator.h"

#include <algorithm>
#include <utility>

#include "absl/strings/str_format.h"

namespace netreduce {

absl::string_view PacketClassName(PacketClass c) {
  switch (c) {
    case PacketClass::kFirstAggregation:
      return "first";
    case PacketClass::kNonFirstAggregation:
      return "non-first";
    case PacketClass::kPassthrough:
      return "passthrough";
  }
  return "unknown";
}

HeaderRecoveryTable::HeaderRecoveryTable(int rings, int hosts_per_ring,
                                         int window)
    : lut1_capacity_(static_cast<size_t>(std::max(rings, 1)) *
                     std::max(hosts_per_ring, 1)),
      hosts_per_ring_(std::max(hosts_per_ring, 1)),
      window_(static_cast<size_t>(std::max(window, 1))) {}

const Lut1Entry* HeaderRecoveryTable::FindConnection(
    const ConnectionKey& key) const {
  auto it = lut1_.find(key);
  return it == lut1_.end() ? nullptr : &it->second;
}

const Lut2Entry* HeaderRecoveryTable::FindMessage(const ConnectionKey& key,
                                                  uint32_t psn) const {
  auto it = lut2_.find(key);
  if (it == lut2_.end()) return nullptr;
  for (const Lut2Entry& e : it->second) {
    if (PsnInRange(psn, e.psn0, e.msg_len)) return &e;
  }
  return nullptr;
}

absl::StatusOr<Lut1Entry> HeaderRecoveryTable::RecordFirst(
    const ConnectionKey& key, const NetReduceHeader& header, uint32_t psn) {
  auto it = lut1_.find(key);
  if (it == lut1_.end()) {
    if (lut1_.size() >= lut1_capacity_) {
      return absl::ResourceExhaustedError(absl::StrFormat(
          "LUT#1 full (%d entries) at connection %s->%s QP %d",
          lut1_capacity_, FormatIp(key.src_ip), FormatIp(key.dst_ip),
          key.dst_qp));
    }
    uint16_t& next = next_host_id_[header.ring_id];
    if (next >= hosts_per_ring_) {
      return absl::ResourceExhaustedError(absl::StrFormat(
          "ring %d already has %d hosts; rejecting %s", header.ring_id,
          hosts_per_ring_, FormatIp(key.src_ip)));
    }
    it = lut1_.emplace(key, Lut1Entry{key, header.ring_id, next++}).first;
  } else if (it->second.ring_id != header.ring_id) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "connection from %s is bound to ring %d but carries ring %d",
        FormatIp(key.src_ip), it->second.ring_id, header.ring_id));
  }

  std::vector<Lut2Entry>& entries = lut2_[key];
  for (const Lut2Entry& e : entries) {
    if (e.msg_id == header.msg_id) return it->second;
  }
  auto [max_it, inserted] = max_msg_.try_emplace(key, header.msg_id);
  if (!inserted) {
    if (header.msg_id + window_ <= max_it->second) return it->second;
    max_it->second = std::max(max_it->second, header.msg_id);
  }
  const uint32_t newest = max_it->second;
  const size_t before = entries.size();
  std::erase_if(entries, [&](const Lut2Entry& e) {
    return e.msg_id + window_ <= newest;
  });
  lut2_live_ -= before - entries.size();
  if (entries.size() >= window_) {
    return absl::ResourceExhaustedError(absl::StrFormat(
        "LUT#2 overflow for %s: %d live messages", FormatIp(key.src_ip),
        entries.size()));
  }
  entries.push_back(Lut2Entry{key, psn, header.msg_len, header.msg_id});
  ++lut2_live_;
  return it->second;
}

ArrivalBitmap::ArrivalBitmap(int hosts, int window, int msg_len)
    : hosts_(std::max(hosts, 1)),
      slots_(std::max(window, 1) + 1),
      msg_len_(std::max(msg_len, 1)),
      bits_(static_cast<size_t>(hosts_) * slots_ * msg_len_, false) {}

ArrivalBitmap::Update ArrivalBitmap::Set(int host, uint32_t msg_id,
                                         int offset, bool clear_paired) {
  Update u;
  u.column = Column(msg_id, offset);
  u.cleared_column = PairedColumn(msg_id, offset);
  const size_t row = static_cast<size_t>(host) * columns();
  if (bits_[row + u.column]) {
    u.result = SetResult::kDuplicate;
    return u;
  }
  bits_[row + u.column] = true;
  if (!clear_paired) return u;
  u.cleared_was_set = bits_[row + u.cleared_column];
  bits_[row + u.cleared_column] = false;
  return u;
}

bool ArrivalBitmap::ColumnFull(size_t column) const {
  for (int h = 0; h < hosts_; ++h) {
    if (!Get(h, column)) return false;
  }
  return true;
}

bool ArrivalBitmap::ColumnClear(size_t column) const {
  for (int h = 0; h < hosts_; ++h) {
    if (Get(h, column)) return false;
  }
  return true;
}

AcceleratorStats& AcceleratorStats::operator+=(const AcceleratorStats& o) {
  packets_in += o.packets_in;
  passthrough += o.passthrough;
  consumed += o.consumed;
  aggregations += o.aggregations;
  history_replays += o.history_replays;
  duplicate_discards += o.duplicate_discards;
  early_discards += o.early_discards;
  stale_discards += o.stale_discards;
  unrecoverable_discards += o.unrecoverable_discards;
  exactly_once_violations += o.exactly_once_violations;
  live_clear_violations += o.live_clear_violations;
  upstream_sent += o.upstream_sent;
  upstream_resends += o.upstream_resends;
  stash_controls += o.stash_controls;
  restores += o.restores;
  missing_stash += o.missing_stash;
  stash_bypassed += o.stash_bypassed;
  return *this;
}

namespace {

HeaderManagerOptions HeaderOptionsFor(const AcceleratorOptions& o) {
  HeaderManagerOptions h = o.header;
  h.self = o.self;
  h.role = o.role == AcceleratorRole::kSpine ? SwitchRole::kSpine
                                             : SwitchRole::kLeaf;
  return h;
}

}  // namespace

Accelerator::Accelerator(AcceleratorOptions options)
    : options_(std::move(options)),
      luts_(options_.rings, options_.hosts_per_ring, options_.window),
      header_manager_(HeaderOptionsFor(options_)),
      members_(options_.member_ips.begin(), options_.member_ips.end()) {
  for (const auto& [ring, qps] : options_.local_destination_qps) {
    local_destination_qp_set_.insert(qps.begin(), qps.end());
  }
}

const ArrivalBitmap* Accelerator::bitmap(uint16_t ring_id) const {
  auto it = rings_.find(ring_id);
  return it == rings_.end() ? nullptr : &it->second.bitmap;
}

const HistoryBuffer* Accelerator::history(uint16_t ring_id) const {
  auto it = rings_.find(ring_id);
  return it == rings_.end() ? nullptr : &it->second.history;
}

absl::StatusOr<Accelerator::RingState*> Accelerator::Ring(uint16_t ring_id) {
  auto it = rings_.find(ring_id);
  if (it != rings_.end()) return &it->second;
  if (ring_id >= options_.rings) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ring %d outside the %d rings configured at %s", ring_id,
        options_.rings, FormatIp(options_.self.ip)));
  }
  it = rings_
           .try_emplace(ring_id, options_.hosts_per_ring, options_.window,
                        options_.max_msg_len)
           .first;
  return &it->second;
}

bool Accelerator::IsMember(uint32_t ip) const {
  return members_.empty() || members_.contains(ip);
}

bool Accelerator::TwoLevelLeaf() const {
  return options_.role == AcceleratorRole::kLeaf &&
         !header_manager_.single_switch();
}

void Accelerator::Trace(PacketClass klass,
                        const std::optional<Recovered>& where,
                        absl::string_view action) const {
  if (tracer_) tracer_(AcceleratorTraceRecord{klass, where, action});
}

PacketClass Accelerator::Classify(const Packet& pkt) const {
  const TransportHeaders& t = pkt.transport;
  if (t.opcode != Opcode::kData || t.udp_dst_port != kRoceV2UdpPort ||
      !IsMember(t.src_ip)) {
    return PacketClass::kPassthrough;
  }
  if (options_.role == AcceleratorRole::kSpine &&
      t.dst_ip != options_.self.ip) {
    return PacketClass::kPassthrough;
  }
  if (pkt.nr_header.has_value() && pkt.nr_header->IsValid()) {
    return PacketClass::kFirstAggregation;
  }
  // Aggregation traffic addressed to the spine is never forwarded, even
  // before its connection is known.
  if (options_.role == AcceleratorRole::kSpine ||
      luts_.FindConnection(KeyOf(t)) != nullptr) {
    return PacketClass::kNonFirstAggregation;
  }
  return PacketClass::kPassthrough;
}

absl::StatusOr<Recovered> Accelerator::Recover(const Packet& pkt) {
  const ConnectionKey key = KeyOf(pkt.transport);
  if (pkt.nr_header.has_value() && pkt.nr_header->IsValid()) {
    const NetReduceHeader& h = *pkt.nr_header;
    auto entry = luts_.RecordFirst(key, h, pkt.transport.psn);
    if (!entry.ok()) return entry.status();
    return Recovered{entry->ring_id, entry->host_id, h.msg_id, 0, h.msg_len};
  }
  const Lut1Entry* conn = luts_.FindConnection(key);
  const Lut2Entry* msg = luts_.FindMessage(key, pkt.transport.psn);
  if (conn == nullptr || msg == nullptr) {
    return absl::NotFoundError(absl::StrFormat(
        "no message covers PSN %d from %s", pkt.transport.psn,
        FormatIp(key.src_ip)));
  }
  return Recovered{conn->ring_id, conn->host_id, msg->msg_id,
                   static_cast<uint16_t>(
                       PsnDistance(msg->psn0, pkt.transport.psn)),
                   msg->msg_len};
}

ArrivalBitmap::Update Accelerator::SetState(uint16_t ring_id,
                                            uint16_t host_id,
                                            uint32_t msg_id,
                                            uint16_t offset) {
  // Callers validate the ring first. The paired column is only cleared
  // while it still belongs to message msg_id - N; the first N messages have
  // no predecessor there.
  RingState& ring = rings_.at(ring_id);
  const uint32_t window = static_cast<uint32_t>(options_.window);
  const size_t paired = ring.bitmap.PairedColumn(msg_id, offset);
  const bool clear = msg_id >= window &&
                     ring.columns[paired].epoch ==
                         static_cast<int64_t>(msg_id - window);
  return ring.bitmap.Set(host_id, msg_id, offset, clear);
}

void Accelerator::Emit(std::vector<Packet>& out, const StashedHeaders& headers,
                       const std::vector<FixedWord>& payload) const {
  Packet p;
  p.transport = headers.transport;
  p.nr_header = headers.nr_header;
  p.payload = payload;
  if (options_.role == AcceleratorRole::kSpine) {
    HeaderManager::SwapAddresses(p.transport);
  }
  out.push_back(std::move(p));
}

void Accelerator::EmitColumnResult(std::vector<Packet>& out, Column& col,
                                   const Recovered& where, size_t column) {
  RingState& ring = rings_.at(where.ring_id);
  if (!TwoLevelLeaf()) {
    ring.history.Store(column, col.sum);
    for (const auto& headers : col.pending) Emit(out, *headers, col.sum);
    return;
  }
  for (const auto& headers : col.pending) {
    Packet original;
    original.transport = headers->transport;
    original.nr_header = headers->nr_header;
    if (auto control = header_manager_.ShipHeaders(original)) {
      out.push_back(*std::move(control));
      ++stats_.stash_controls;
    }
  }
  Packet up;
  up.transport = col.pending[0]->transport;
  up.nr_header = col.pending[0]->nr_header;
  up.payload = col.sum;
  upstream_pending_[{up.transport.dst_qp, up.transport.psn}] =
      UpstreamRef{where.ring_id, column, where.msg_id};
  header_manager_.RewriteUpstream(up.transport);
  col.upstream = up;
  out.push_back(std::move(up));
  ++stats_.upstream_sent;
}

absl::StatusOr<std::vector<Packet>> Accelerator::OnAggregationPacket(
    Packet pkt, const Recovered& where) {
  std::vector<Packet> out;
  auto ring_or = Ring(where.ring_id);
  if (!ring_or.ok()) return ring_or.status();
  RingState& ring = **ring_or;
  const PacketClass klass = where.offset == 0
                                ? PacketClass::kFirstAggregation
                                : PacketClass::kNonFirstAggregation;
  if (where.msg_len > ring.bitmap.msg_len() || where.offset >= where.msg_len ||
      where.host_id >= ring.bitmap.hosts()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ring %d: message %d offset %d/%d host %d exceeds the bitmap",
        where.ring_id, where.msg_id, where.offset, where.msg_len,
        where.host_id));
  }
  const size_t c = ring.bitmap.Column(where.msg_id, where.offset);
  Column& col = ring.columns[c];
  const int64_t msg = where.msg_id;

  if (col.epoch > msg) {
    ++stats_.stale_discards;
    Trace(klass, where, "stale");
    return out;
  }
  if (col.epoch < msg) {
    if (!ring.bitmap.ColumnClear(c)) {
      ++stats_.early_discards;
      Trace(klass, where, "early_discard");
      return out;
    }
    col = Column{};
    col.epoch = msg;
    col.msg_len = where.msg_len;
    col.sum.assign(pkt.payload.size(), FixedWord{0});
    col.pending.resize(ring.bitmap.hosts());
    ring.history.Clear(c);
  }

  if (col.complete) {
    if (!TwoLevelLeaf()) {
      if (const auto* result = ring.history.Load(c)) {
        Emit(out, StashedHeaders{pkt.transport, pkt.nr_header}, *result);
        ++stats_.history_replays;
        Trace(klass, where, "replay");
      }
      return out;
    }
    if (col.global_known) {
      pkt.payload = *ring.history.Load(c);
      out.push_back(std::move(pkt));
      ++stats_.history_replays;
      Trace(klass, where, "replay");
    } else if (col.upstream.has_value()) {
      out.push_back(*col.upstream);
      ++stats_.upstream_resends;
      Trace(klass, where, "upstream_resend");
    }
    return out;
  }

  const ArrivalBitmap::Update u =
      SetState(where.ring_id, where.host_id, where.msg_id, where.offset);
  if (u.result == SetResult::kDuplicate) {
    ++stats_.duplicate_discards;
    Trace(klass, where, "duplicate");
    return out;
  }
  if (u.cleared_was_set) {
    const Column& cleared = ring.columns[u.cleared_column];
    if (!cleared.complete) ++stats_.live_clear_violations;
  }
  if (col.pending[where.host_id].has_value()) {
    ++stats_.exactly_once_violations;
    Trace(klass, where, "violation");
    return out;
  }
  if (pkt.payload.size() != col.sum.size()) {
    return absl::DataLossError(absl::StrFormat(
        "ring %d message %d offset %d: payload of %d words, column holds %d",
        where.ring_id, where.msg_id, where.offset, pkt.payload.size(),
        col.sum.size()));
  }
  AccumulateInto(col.sum, pkt.payload);
  col.pending[where.host_id] = StashedHeaders{pkt.transport, pkt.nr_header};
  ++col.count;
  if (col.count < ring.bitmap.hosts()) {
    Trace(klass, where, "aggregate");
    return out;
  }
  col.complete = true;
  ++stats_.aggregations;
  Trace(klass, where, "complete");
  EmitColumnResult(out, col, where, c);
  return out;
}

absl::StatusOr<std::vector<Packet>> Accelerator::OnSpineResult(Packet pkt) {
  std::vector<Packet> out;
  auto it = upstream_pending_.find({pkt.transport.dst_qp, pkt.transport.psn});
  if (it == upstream_pending_.end()) {
    ++stats_.stale_discards;
    ++stats_.consumed;
    Trace(PacketClass::kPassthrough, std::nullopt, "stale");
    return out;
  }
  const UpstreamRef ref = it->second;
  upstream_pending_.erase(it);
  RingState& ring = rings_.at(ref.ring_id);
  Column& col = ring.columns[ref.column];
  const Recovered where{ref.ring_id, 0, ref.msg_id,
                        static_cast<uint16_t>(ref.column %
                                              ring.bitmap.msg_len()),
                        col.msg_len};
  ++stats_.consumed;
  if (col.epoch != static_cast<int64_t>(ref.msg_id)) {
    ++stats_.stale_discards;
    Trace(PacketClass::kPassthrough, where, "stale");
    return out;
  }
  ring.history.Store(ref.column, pkt.payload);
  col.global_known = true;
  Trace(PacketClass::kPassthrough, where, "global_result");
  auto qps = options_.local_destination_qps.find(ref.ring_id);
  if (qps == options_.local_destination_qps.end()) return out;
  for (uint32_t qp : qps->second) {
    auto restored = header_manager_.Take(qp, pkt.transport.psn);
    if (!restored.ok()) {
      ++stats_.missing_stash;
      continue;
    }
    Emit(out, *restored, pkt.payload);
    ++stats_.restores;
  }
  return out;
}

absl::StatusOr<std::vector<Packet>> Accelerator::Process(Packet pkt) {
  ++stats_.packets_in;
  std::vector<Packet> out;
  if (TwoLevelLeaf() && pkt.transport.dst_ip == options_.self.ip) {
    if (pkt.transport.opcode == Opcode::kHeaderStash) {
      ++stats_.consumed;
      auto r = header_manager_.Manage(std::move(pkt));
      if (!r.ok()) return r.status();
      Trace(PacketClass::kPassthrough, std::nullopt, "stash");
      return out;
    }
    if (pkt.transport.opcode == Opcode::kData) {
      return OnSpineResult(std::move(pkt));
    }
  }

  const PacketClass klass = Classify(pkt);
  if (klass == PacketClass::kPassthrough) {
    if (TwoLevelLeaf() && pkt.transport.opcode == Opcode::kData &&
        local_destination_qp_set_.contains(pkt.transport.dst_qp) &&
        header_manager_.Erase(pkt.transport.dst_qp, pkt.transport.psn)) {
      ++stats_.stash_bypassed;
    }
    ++stats_.passthrough;
    Trace(klass, std::nullopt, "passthrough");
    out.push_back(std::move(pkt));
    return out;
  }

  auto where = Recover(pkt);
  if (!where.ok()) {
    if (absl::IsNotFound(where.status())) {
      ++stats_.unrecoverable_discards;
      Trace(klass, std::nullopt, "unrecoverable");
      return out;
    }
    return where.status();
  }
  return OnAggregationPacket(std::move(pkt), *where);
}

}  // namespace netreduce

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

#include "netreduce/protocol.h"

#include <algorithm>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"

namespace netreduce {
namespace {

void PutBe16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v >> 8);
  p[1] = static_cast<uint8_t>(v);
}

void PutBe32(uint8_t* p, uint32_t v) {
  p[0] = static_cast<uint8_t>(v >> 24);
  p[1] = static_cast<uint8_t>(v >> 16);
  p[2] = static_cast<uint8_t>(v >> 8);
  p[3] = static_cast<uint8_t>(v);
}

uint16_t GetBe16(const uint8_t* p) {
  return static_cast<uint16_t>((uint16_t{p[0]} << 8) | p[1]);
}

uint32_t GetBe32(const uint8_t* p) {
  return (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) |
         (uint32_t{p[2]} << 8) | uint32_t{p[3]};
}

}  // namespace

std::array<uint8_t, kNetReduceHeaderBytes> EncodeHeader(
    const NetReduceHeader& h) {
  std::array<uint8_t, kNetReduceHeaderBytes> out{};
  PutBe32(&out[0], h.inet_tag);
  PutBe16(&out[4], h.ring_id);
  PutBe32(&out[8], h.msg_id);
  PutBe16(&out[12], h.msg_len);
  return out;
}

absl::StatusOr<NetReduceHeader> DecodeHeader(std::span<const uint8_t> bytes) {
  if (bytes.size() < kNetReduceHeaderBytes) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "NetReduce header needs %d bytes, got %d", kNetReduceHeaderBytes,
        bytes.size()));
  }
  NetReduceHeader h;
  h.inet_tag = GetBe32(&bytes[0]);
  h.ring_id = GetBe16(&bytes[4]);
  h.msg_id = GetBe32(&bytes[8]);
  h.msg_len = GetBe16(&bytes[12]);
  return h;
}

size_t Packet::SizeBytes() const {
  size_t size = kTransportHeaderBytes + PayloadBytes();
  if (nr_header.has_value()) size += kNetReduceHeaderBytes;
  if (transport.opcode == Opcode::kAck) size += kAethBytes;
  if (stashed.has_value()) {
    size += kTransportHeaderBytes;
    if (stashed->nr_header.has_value()) size += kNetReduceHeaderBytes;
  }
  return size;
}

absl::StatusOr<std::vector<Packet>> SegmentMessage(
    uint16_t ring_id, uint32_t msg_id, std::span<const FixedWord> payload,
    size_t pmtu_bytes, uint32_t base_psn, const TransportHeaders& headers) {
  if (payload.empty()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("message %d of ring %d has an empty payload", msg_id,
                        ring_id));
  }
  if (pmtu_bytes < kWordBytes) {
    return absl::InvalidArgumentError(
        absl::StrFormat("PMTU of %d bytes is smaller than one word",
                        pmtu_bytes));
  }
  const size_t words_per_packet = pmtu_bytes / kWordBytes;
  const size_t count = (payload.size() + words_per_packet - 1) /
                       words_per_packet;
  if (count > std::numeric_limits<uint16_t>::max()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "message needs %d packets, more than MsgLen can express", count));
  }

  std::vector<Packet> packets(count);
  for (size_t i = 0; i < count; ++i) {
    Packet& p = packets[i];
    p.transport = headers;
    p.transport.opcode = Opcode::kData;
    p.transport.psn = PsnAdd(base_psn, static_cast<uint32_t>(i));
    const size_t begin = i * words_per_packet;
    const size_t end = std::min(payload.size(), begin + words_per_packet);
    p.payload.assign(payload.begin() + begin, payload.begin() + end);
  }
  packets.front().nr_header = NetReduceHeader{
      .inet_tag = kInetTag,
      .ring_id = ring_id,
      .msg_id = msg_id,
      .msg_len = static_cast<uint16_t>(count),
  };
  return packets;
}

std::string FormatIp(uint32_t ip) {
  return absl::StrFormat("%d.%d.%d.%d", ip >> 24, (ip >> 16) & 0xff,
                         (ip >> 8) & 0xff, ip & 0xff);
}

}  // namespace netreduce

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

#ifndef NETREDUCE_PROTOCOL_H_
#define NETREDUCE_PROTOCOL_H_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "netreduce/fixed_point.h"

namespace netreduce {

// Magic value carried in the first word of every NetReduce header.
inline constexpr uint32_t kInetTag = 0x4E455452;  // "NETR"
inline constexpr uint16_t kRoceV2UdpPort = 4791;

inline constexpr size_t kEthernetHeaderBytes = 14;
inline constexpr size_t kIpv4HeaderBytes = 20;
inline constexpr size_t kUdpHeaderBytes = 8;
inline constexpr size_t kBthBytes = 12;
inline constexpr size_t kAethBytes = 4;
inline constexpr size_t kNetReduceHeaderBytes = 16;
inline constexpr size_t kTransportHeaderBytes =
    kEthernetHeaderBytes + kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes;
inline constexpr size_t kWordBytes = 4;

inline constexpr uint32_t kPsnModulus = 1u << 24;
inline constexpr uint32_t kQpMask = (1u << 24) - 1;
inline constexpr uint64_t kMacMask = (uint64_t{1} << 48) - 1;

// The aggregation header placed after the BTH of a message's first packet.
//
// Wire layout (16 bytes, big-endian):
//   0..3   inet_tag
//   4..5   ring_id
//   6..7   reserved (zero)
//   8..11  msg_id
//   12..13 msg_len
//   14..15 reserved (zero)
struct NetReduceHeader {
  uint32_t inet_tag = kInetTag;
  uint16_t ring_id = 0;
  uint32_t msg_id = 0;
  uint16_t msg_len = 1;

  bool IsValid() const { return inet_tag == kInetTag && msg_len >= 1; }
  friend bool operator==(const NetReduceHeader&,
                         const NetReduceHeader&) = default;
};

std::array<uint8_t, kNetReduceHeaderBytes> EncodeHeader(
    const NetReduceHeader& h);
absl::StatusOr<NetReduceHeader> DecodeHeader(std::span<const uint8_t> bytes);

// BTH opcode classes the simulator distinguishes.
enum class Opcode : uint8_t {
  kData = 0,
  kAck = 1,
  // Leaf-to-leaf transfer of a worker-bound header set (spine-leaf mode).
  kHeaderStash = 2,
};

// Simulated RoCE v2 header stack. Only the fields the simulator acts on are
// modelled. For kAck packets `psn` is the cumulative acknowledged PSN.
struct TransportHeaders {
  uint64_t src_mac = 0;
  uint64_t dst_mac = 0;
  uint32_t src_ip = 0;
  uint32_t dst_ip = 0;
  uint16_t udp_dst_port = kRoceV2UdpPort;
  uint32_t dst_qp = 0;
  uint32_t psn = 0;
  Opcode opcode = Opcode::kData;

  friend bool operator==(const TransportHeaders&,
                         const TransportHeaders&) = default;
};

// A complete header set as stored by a leaf's header manager.
struct StashedHeaders {
  TransportHeaders transport;
  std::optional<NetReduceHeader> nr_header;

  friend bool operator==(const StashedHeaders&,
                         const StashedHeaders&) = default;
};

struct Packet {
  TransportHeaders transport;
  std::optional<NetReduceHeader> nr_header;
  std::vector<FixedWord> payload;
  // Present only on kHeaderStash control packets.
  std::optional<StashedHeaders> stashed;

  size_t PayloadBytes() const { return payload.size() * kWordBytes; }
  // Total on-wire size: header stack plus payload.
  size_t SizeBytes() const;

  friend bool operator==(const Packet&, const Packet&) = default;
};

// {SrcIP, DstIP, DstQP}: identifies one simulated RC connection.
struct ConnectionKey {
  uint32_t src_ip = 0;
  uint32_t dst_ip = 0;
  uint32_t dst_qp = 0;

  friend auto operator<=>(const ConnectionKey&,
                          const ConnectionKey&) = default;
  template <typename H>
  friend H AbslHashValue(H h, const ConnectionKey& k) {
    return H::combine(std::move(h), k.src_ip, k.dst_ip, k.dst_qp);
  }
};

inline ConnectionKey KeyOf(const TransportHeaders& t) {
  return {t.src_ip, t.dst_ip, t.dst_qp};
}

// PSN arithmetic modulo 2^24.
constexpr uint32_t PsnAdd(uint32_t psn, uint32_t delta) {
  return (psn + delta) & (kPsnModulus - 1);
}
constexpr uint32_t PsnDistance(uint32_t from, uint32_t to) {
  return (to - from) & (kPsnModulus - 1);
}
// True iff `psn` lies in [psn0, psn0 + len - 1] modulo 2^24.
constexpr bool PsnInRange(uint32_t psn, uint32_t psn0, uint32_t len) {
  return PsnDistance(psn0, psn) < len;
}
// True iff `a` precedes `b` within half the PSN space.
constexpr bool PsnBefore(uint32_t a, uint32_t b) {
  const uint32_t d = PsnDistance(a, b);
  return d != 0 && d < kPsnModulus / 2;
}

// Splits one message into PMTU-sized packets. Packet 0 carries the
// NetReduce header with msg_len equal to the packet count; PSNs are
// consecutive from `base_psn`. Addressing fields are copied from
// `headers` (its psn is ignored).
absl::StatusOr<std::vector<Packet>> SegmentMessage(
    uint16_t ring_id, uint32_t msg_id, std::span<const FixedWord> payload,
    size_t pmtu_bytes, uint32_t base_psn,
    const TransportHeaders& headers = {});

// Number of packets a message of `payload_bytes` splits into.
constexpr size_t PacketsPerMessage(size_t payload_bytes, size_t pmtu_bytes) {
  return (payload_bytes + pmtu_bytes - 1) / pmtu_bytes;
}

std::string FormatIp(uint32_t ip);

}  // namespace netreduce

#endif  // NETREDUCE_PROTOCOL_H_

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

#include <cstdint>
#include <vector>

#include "absl/container/flat_hash_set.h"
#include "gtest/gtest.h"
#include "support/gen.h"

namespace netreduce {
namespace {

using ::netreduce::testing::Gen;

TEST(HeaderCodecTest, WireLayout) {
  const NetReduceHeader h{kInetTag, 0x0102, 0x0A0B0C0D, 170};
  const auto bytes = EncodeHeader(h);
  const std::array<uint8_t, 16> want = {0x4E, 0x45, 0x54, 0x52, 0x01, 0x02,
                                        0x00, 0x00, 0x0A, 0x0B, 0x0C, 0x0D,
                                        0x00, 0xAA, 0x00, 0x00};
  EXPECT_EQ(bytes, want);
  auto back = DecodeHeader(bytes);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, h);
}

TEST(HeaderCodecTest, RoundTripsRandomHeaders) {
  Gen gen(21);
  for (int i = 0; i < 1000; ++i) {
    const NetReduceHeader h{static_cast<uint32_t>(gen.Next()),
                            static_cast<uint16_t>(gen.Next()),
                            static_cast<uint32_t>(gen.Next()),
                            static_cast<uint16_t>(gen.Next())};
    auto back = DecodeHeader(EncodeHeader(h));
    ASSERT_TRUE(back.ok());
    ASSERT_EQ(*back, h);
  }
}

TEST(HeaderCodecTest, ShortBufferAndBadTag) {
  const std::vector<uint8_t> short_buf(15, 0);
  EXPECT_FALSE(DecodeHeader(short_buf).ok());
  NetReduceHeader h;
  EXPECT_TRUE(h.IsValid());
  h.inet_tag = 0;
  EXPECT_FALSE(h.IsValid());
  h.inet_tag = kInetTag;
  h.msg_len = 0;
  EXPECT_FALSE(h.IsValid());
}

std::vector<FixedWord> Words(size_t n) {
  std::vector<FixedWord> w(n);
  for (size_t i = 0; i < n; ++i) w[i].raw = static_cast<int32_t>(i);
  return w;
}

TEST(SegmentMessageTest, FullMessageOf170Packets) {
  const auto payload = Words(170 * 256);
  TransportHeaders t;
  t.src_ip = 1;
  t.dst_ip = 2;
  t.dst_qp = 7;
  auto pkts = SegmentMessage(3, 9, payload, 1024, 1000, t);
  ASSERT_TRUE(pkts.ok());
  ASSERT_EQ(pkts->size(), 170u);
  ASSERT_TRUE((*pkts)[0].nr_header.has_value());
  EXPECT_EQ((*pkts)[0].nr_header->ring_id, 3);
  EXPECT_EQ((*pkts)[0].nr_header->msg_id, 9u);
  EXPECT_EQ((*pkts)[0].nr_header->msg_len, 170);
  for (size_t i = 0; i < pkts->size(); ++i) {
    const Packet& p = (*pkts)[i];
    EXPECT_EQ(p.transport.psn, 1000 + i);
    EXPECT_EQ(p.transport.dst_qp, 7u);
    EXPECT_EQ(p.payload.size(), 256u);
    EXPECT_EQ(p.payload.front().raw, static_cast<int32_t>(256 * i));
    if (i > 0) EXPECT_FALSE(p.nr_header.has_value());
  }
}

TEST(SegmentMessageTest, ShortTailAndPsnWrap) {
  const auto payload = Words(10);
  auto pkts = SegmentMessage(0, 0, payload, 16, kPsnModulus - 1);
  ASSERT_TRUE(pkts.ok());
  ASSERT_EQ(pkts->size(), 3u);
  EXPECT_EQ((*pkts)[0].transport.psn, kPsnModulus - 1);
  EXPECT_EQ((*pkts)[1].transport.psn, 0u);
  EXPECT_EQ((*pkts)[2].transport.psn, 1u);
  EXPECT_EQ((*pkts)[2].payload.size(), 2u);
  EXPECT_EQ((*pkts)[0].nr_header->msg_len, 3);
}

TEST(SegmentMessageTest, RejectsEmptyAndOversized) {
  EXPECT_FALSE(SegmentMessage(0, 0, {}, 1024, 0).ok());
  const auto payload = Words(4);
  EXPECT_FALSE(SegmentMessage(0, 0, payload, 2, 0).ok());
  const auto big = Words(65536);
  EXPECT_FALSE(SegmentMessage(0, 0, big, 4, 0).ok());
}

TEST(SegmentMessageTest, ConcatenationRestoresPayload) {
  Gen gen(22);
  for (int i = 0; i < 200; ++i) {
    const auto payload = Words(static_cast<size_t>(gen.Int(1, 5000)));
    const size_t pmtu = 4 * static_cast<size_t>(gen.Int(1, 300));
    auto pkts = SegmentMessage(0, 0, payload, pmtu, 0);
    ASSERT_TRUE(pkts.ok());
    EXPECT_EQ(pkts->size(), PacketsPerMessage(payload.size() * 4, pmtu));
    std::vector<FixedWord> joined;
    for (const Packet& p : *pkts) {
      ASSERT_LE(p.PayloadBytes(), pmtu);
      joined.insert(joined.end(), p.payload.begin(), p.payload.end());
    }
    ASSERT_EQ(joined, payload);
  }
}

TEST(PacketTest, SizeBytes) {
  Packet p;
  p.payload.resize(256);
  EXPECT_EQ(p.SizeBytes(), 54u + 1024u);
  p.nr_header = NetReduceHeader{};
  EXPECT_EQ(p.SizeBytes(), 54u + 16u + 1024u);
  Packet ack;
  ack.transport.opcode = Opcode::kAck;
  EXPECT_EQ(ack.SizeBytes(), 58u);
  Packet stash;
  stash.transport.opcode = Opcode::kHeaderStash;
  stash.stashed = StashedHeaders{{}, NetReduceHeader{}};
  EXPECT_EQ(stash.SizeBytes(), 54u + 54u + 16u);
}

TEST(PsnTest, ModularArithmetic) {
  EXPECT_EQ(PsnAdd(kPsnModulus - 2, 5), 3u);
  EXPECT_EQ(PsnDistance(kPsnModulus - 2, 3), 5u);
  EXPECT_TRUE(PsnInRange(1, kPsnModulus - 2, 4));
  EXPECT_FALSE(PsnInRange(2, kPsnModulus - 2, 4));
  EXPECT_TRUE(PsnBefore(kPsnModulus - 1, 0));
  EXPECT_FALSE(PsnBefore(0, kPsnModulus - 1));
  EXPECT_FALSE(PsnBefore(5, 5));
}

TEST(PsnTest, BeforeIsAntisymmetric) {
  Gen gen(23);
  for (int i = 0; i < 10000; ++i) {
    const auto a = static_cast<uint32_t>(gen.Next() % kPsnModulus);
    const auto d = static_cast<uint32_t>(gen.Int(1, kPsnModulus / 2 - 1));
    const uint32_t b = PsnAdd(a, d);
    ASSERT_TRUE(PsnBefore(a, b));
    ASSERT_FALSE(PsnBefore(b, a));
    ASSERT_TRUE(PsnInRange(b, a, d + 1));
    ASSERT_FALSE(PsnInRange(b, a, d));
  }
}

TEST(ConnectionKeyTest, HashesAndOrders) {
  absl::flat_hash_set<ConnectionKey> keys;
  keys.insert({1, 2, 3});
  keys.insert({1, 2, 3});
  keys.insert({1, 2, 4});
  EXPECT_EQ(keys.size(), 2u);
  EXPECT_LT((ConnectionKey{1, 2, 3}), (ConnectionKey{1, 2, 4}));
  TransportHeaders t;
  t.src_ip = 5;
  t.dst_ip = 6;
  t.dst_qp = 7;
  EXPECT_EQ(KeyOf(t), (ConnectionKey{5, 6, 7}));
}

TEST(FormatIpTest, DottedQuad) {
  EXPECT_EQ(FormatIp(0x0A000001), "10.0.0.1");
  EXPECT_EQ(FormatIp(0xFFFFFFFF), "255.255.255.255");
}

}  // namespace
}  // namespace netreduce

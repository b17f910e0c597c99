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

#include "netreduce/endhost.h"

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gtest/gtest.h"
#include "support/gen.h"

namespace netreduce {
namespace {

using ::netreduce::testing::Gen;

constexpr uint32_t kSendQp = 0x100;
constexpr uint32_t kRecvQp = 0x200;
constexpr uint32_t kPeerRecvQp = 0x300;
constexpr uint32_t kPeerSendQp = 0x400;

struct Timer {
  uint32_t msg_id;
  uint64_t generation;
  double at;
};

class FakeTransport : public WorkerTransport {
 public:
  double Now() const override { return now; }
  double Send(Packet pkt) override {
    sent.push_back(std::move(pkt));
    return now + 1e-6 * static_cast<double>(sent.size());
  }
  void ArmTimer(uint32_t msg_id, uint64_t generation, double at) override {
    timers.push_back({msg_id, generation, at});
  }
  void Trace(absl::string_view event, uint32_t, uint32_t) override {
    traces.emplace_back(event);
  }

  std::vector<Packet> TakeData() {
    std::vector<Packet> data;
    for (Packet& p : sent) {
      if (p.transport.opcode == Opcode::kData) data.push_back(std::move(p));
    }
    sent.clear();
    return data;
  }

  double now = 0.0;
  std::vector<Packet> sent;
  std::vector<Timer> timers;
  std::vector<std::string> traces;
};

WorkerConfig Config(int window, size_t msg_words, uint32_t base_psn = 0) {
  WorkerConfig c;
  c.ring_id = 3;
  c.window = window;
  c.msg_words = msg_words;
  c.pmtu_bytes = 1024;
  c.base_psn = base_psn;
  c.retransmit_timeout = 1e-3;
  c.send_headers.dst_qp = kPeerRecvQp;
  c.send_qp = kSendQp;
  c.recv_qp = kRecvQp;
  c.ack_headers.dst_qp = kPeerSendQp;
  return c;
}

std::vector<FixedWord> Iota(size_t n, int32_t start = 1) {
  std::vector<FixedWord> v(n);
  for (size_t i = 0; i < n; ++i) v[i].raw = start + static_cast<int32_t>(i);
  return v;
}

// Result packets for `msg_id` as the predecessor would send them.
std::vector<Packet> ResultPackets(const Worker& w, uint32_t msg_id,
                                  const std::vector<FixedWord>& words) {
  TransportHeaders h;
  h.dst_qp = kRecvQp;
  return *SegmentMessage(w.config().ring_id, msg_id, words,
                         w.config().pmtu_bytes, w.MessagePsn0(msg_id), h);
}

Packet Ack(uint32_t psn) {
  Packet p;
  p.transport.opcode = Opcode::kAck;
  p.transport.dst_qp = kSendQp;
  p.transport.psn = psn;
  return p;
}

uint32_t LastPsn(const Worker& w, uint32_t msg_id) {
  return PsnAdd(w.MessagePsn0(msg_id), w.MessageLength(msg_id) - 1u);
}

TEST(WorkerTest, MessageLayout) {
  FakeTransport t;
  // 600 words of 256 per packet: messages of 512, 512 and 176 words.
  Worker w(Config(2, 512), Iota(1200), &t);
  EXPECT_EQ(w.num_messages(), 3u);
  EXPECT_EQ(w.MessageLength(0), 2);
  EXPECT_EQ(w.MessageLength(2), 1);
  EXPECT_EQ(w.MessagePsn0(1), 2u);
  EXPECT_EQ(w.MessagePsn0(2), 4u);
}

TEST(WorkerTest, StartSendsOneWindow) {
  FakeTransport t;
  Worker w(Config(2, 512), Iota(512 * 5), &t);
  w.Start();
  const std::vector<Packet> data = t.TakeData();
  ASSERT_EQ(data.size(), 4u);
  for (size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].transport.psn, i);
    EXPECT_EQ(data[i].transport.dst_qp, kPeerRecvQp);
  }
  ASSERT_TRUE(data[0].nr_header.has_value());
  EXPECT_EQ(data[0].nr_header->msg_id, 0u);
  EXPECT_EQ(data[0].nr_header->ring_id, 3);
  EXPECT_EQ(data[0].nr_header->msg_len, 2);
  EXPECT_FALSE(data[1].nr_header.has_value());
  EXPECT_EQ(data[2].nr_header->msg_id, 1u);
  ASSERT_EQ(t.timers.size(), 2u);
  EXPECT_EQ(t.timers[0].msg_id, 0u);
  EXPECT_EQ(w.messages_sent(), 2u);
  EXPECT_EQ(w.in_flight(), 2u);
}

TEST(WorkerTest, CreditNeedsBothResultAndAck) {
  for (bool ack_first : {true, false}) {
    FakeTransport t;
    Worker w(Config(2, 256), Iota(256 * 4), &t);
    w.Start();
    t.TakeData();
    if (ack_first) {
      ASSERT_TRUE(w.OnPacket(Ack(LastPsn(w, 0))).ok());
    } else {
      for (const Packet& p : ResultPackets(w, 0, Iota(256, 100))) {
        ASSERT_TRUE(w.OnPacket(p).ok());
      }
    }
    EXPECT_EQ(w.messages_sent(), 2u);
    EXPECT_TRUE(t.TakeData().empty());
    if (ack_first) {
      for (const Packet& p : ResultPackets(w, 0, Iota(256, 100))) {
        ASSERT_TRUE(w.OnPacket(p).ok());
      }
    } else {
      ASSERT_TRUE(w.OnPacket(Ack(LastPsn(w, 0))).ok());
    }
    EXPECT_EQ(w.messages_sent(), 3u);
    const std::vector<Packet> data = t.TakeData();
    ASSERT_EQ(data.size(), 1u);
    EXPECT_EQ(data[0].nr_header->msg_id, 2u);
  }
}

TEST(WorkerTest, PartialAckDoesNotReleaseCredit) {
  FakeTransport t;
  Worker w(Config(1, 512), Iota(512 * 2), &t);
  w.Start();
  ASSERT_TRUE(w.OnResultMessage(0, Iota(512, 7)).ok());
  w.OnAck(w.MessagePsn0(0));
  EXPECT_EQ(w.messages_acked(), 0u);
  EXPECT_EQ(w.messages_sent(), 1u);
  w.OnAck(LastPsn(w, 0));
  EXPECT_EQ(w.messages_acked(), 1u);
  EXPECT_EQ(w.messages_sent(), 2u);
}

TEST(WorkerTest, ReassemblesResultAndAcknowledges) {
  FakeTransport t;
  Worker w(Config(2, 512), Iota(512 * 2), &t);
  w.Start();
  t.TakeData();
  const std::vector<FixedWord> result = Iota(512, 1000);
  const std::vector<Packet> pkts = ResultPackets(w, 0, result);
  ASSERT_TRUE(w.OnPacket(pkts[0]).ok());
  EXPECT_EQ(w.results_received(), 0u);
  EXPECT_TRUE(t.sent.empty());
  ASSERT_TRUE(w.OnPacket(pkts[1]).ok());
  EXPECT_EQ(w.results_received(), 1u);
  ASSERT_EQ(t.sent.size(), 1u);
  EXPECT_EQ(t.sent[0].transport.opcode, Opcode::kAck);
  EXPECT_EQ(t.sent[0].transport.psn, 1u);
  EXPECT_EQ(t.sent[0].transport.dst_qp, kPeerSendQp);
  EXPECT_TRUE(std::equal(result.begin(), result.end(), w.tensor().begin()));
  // The input stays available for retransmission.
  EXPECT_EQ(w.input()[0].raw, 1);
}

TEST(WorkerTest, OutOfOrderPacketIsDroppedWithoutAck) {
  FakeTransport t;
  Worker w(Config(2, 512), Iota(512 * 2), &t);
  w.Start();
  t.TakeData();
  const std::vector<Packet> pkts = ResultPackets(w, 0, Iota(512));
  ASSERT_TRUE(w.OnPacket(pkts[1]).ok());
  EXPECT_EQ(w.stats().out_of_order_drops, 1u);
  EXPECT_TRUE(t.sent.empty());
  ASSERT_TRUE(w.OnPacket(pkts[0]).ok());
  ASSERT_TRUE(w.OnPacket(pkts[1]).ok());
  EXPECT_EQ(w.results_received(), 1u);
}

TEST(WorkerTest, DuplicateMessageIsReacknowledged) {
  FakeTransport t;
  Worker w(Config(2, 512), Iota(512 * 2), &t);
  w.Start();
  t.TakeData();
  const std::vector<Packet> pkts = ResultPackets(w, 0, Iota(512));
  for (const Packet& p : pkts) ASSERT_TRUE(w.OnPacket(p).ok());
  t.sent.clear();
  // A whole-message retransmission: one ACK for the header packet only.
  for (const Packet& p : pkts) ASSERT_TRUE(w.OnPacket(p).ok());
  EXPECT_EQ(w.stats().duplicate_packets, 2u);
  ASSERT_EQ(t.sent.size(), 1u);
  EXPECT_EQ(t.sent[0].transport.psn, 1u);
  EXPECT_EQ(w.results_received(), 1u);
}

TEST(WorkerTest, TimeoutRetransmitsWithOriginalPsns) {
  FakeTransport t;
  Worker w(Config(2, 512), Iota(512 * 2), &t);
  w.Start();
  const std::vector<Packet> first = t.TakeData();
  ASSERT_EQ(t.timers.size(), 2u);
  const Timer timer = t.timers[1];
  EXPECT_NEAR(timer.at, 4e-6 + 1e-3, 1e-15);

  EXPECT_TRUE(w.OnTimeout(timer.msg_id, timer.generation));
  const std::vector<Packet> again = t.TakeData();
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again[0], first[2]);
  EXPECT_EQ(again[1], first[3]);
  EXPECT_EQ(w.stats().retransmissions, 1u);
  EXPECT_EQ(t.timers.back().generation, timer.generation + 1);

  // The superseded timer is ignored.
  EXPECT_FALSE(w.OnTimeout(timer.msg_id, timer.generation));
  // Acknowledged messages are not retransmitted.
  w.OnAck(LastPsn(w, 1));
  EXPECT_FALSE(w.OnTimeout(1, t.timers.back().generation));
  EXPECT_FALSE(w.OnTimeout(7, 1));
}

TEST(WorkerTest, RejectsForeignAndMalformedPackets) {
  FakeTransport t;
  Worker w(Config(1, 512), Iota(512 * 3), &t);
  w.Start();
  Packet foreign = Ack(0);
  foreign.transport.dst_qp = 0x999;
  EXPECT_EQ(w.OnPacket(foreign).code(), absl::StatusCode::kInvalidArgument);

  std::vector<Packet> pkts = ResultPackets(w, 0, Iota(512));
  pkts[0].nr_header.reset();
  EXPECT_EQ(w.OnPacket(pkts[0]).code(), absl::StatusCode::kDataLoss);

  EXPECT_EQ(w.OnResultMessage(2, Iota(512)).code(),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(w.OnResultMessage(0, Iota(3)).code(), absl::StatusCode::kDataLoss);
  ASSERT_TRUE(w.OnResultMessage(0, Iota(512)).ok());
  EXPECT_EQ(w.OnResultMessage(0, Iota(512)).code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(WorkerTest, PsnSpaceWraps) {
  FakeTransport t;
  const uint32_t base = kPsnModulus - 3;
  Worker wrapped(Config(1, 512, base), Iota(512 * 4), &t);
  wrapped.Start();
  EXPECT_EQ(wrapped.MessagePsn0(2), 1u);
  for (uint32_t m = 0; m < 4; ++m) {
    for (const Packet& p : ResultPackets(wrapped, m, Iota(512, static_cast<int32_t>(m)))) {
      ASSERT_TRUE(wrapped.OnPacket(p).ok());
    }
    wrapped.OnAck(LastPsn(wrapped, m));
    EXPECT_EQ(wrapped.messages_acked(), m + 1);
  }
  EXPECT_TRUE(wrapped.complete());
  EXPECT_TRUE(wrapped.all_acked());
}

TEST(WorkerTest, EmptyTensorHasNoMessages) {
  FakeTransport t;
  Worker w(Config(2, 512), {}, &t);
  w.Start();
  EXPECT_EQ(w.num_messages(), 0u);
  EXPECT_TRUE(w.complete());
  EXPECT_TRUE(t.sent.empty());
}

// Random interleavings of results and acknowledgements never exceed the
// window, release every message exactly once and in order, and leave the
// tensor equal to the delivered results.
TEST(WorkerProperty, WindowAndCompletionUnderRandomOrder) {
  Gen gen(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int window = static_cast<int>(gen.Int(1, 6));
    const size_t msg_words = static_cast<size_t>(gen.Int(1, 4)) * 256;
    const size_t words = static_cast<size_t>(gen.Int(1, 20 * 256));
    FakeTransport t;
    Worker w(Config(window, msg_words, static_cast<uint32_t>(
                                           gen.Int(0, kPsnModulus - 1))),
             Iota(words), &t);
    w.Start();
    std::vector<uint32_t> sent_order;
    std::vector<bool> result_done(w.num_messages(), false);
    uint32_t acked = 0;
    auto collect = [&] {
      for (const Packet& p : t.TakeData()) {
        if (p.nr_header.has_value()) sent_order.push_back(p.nr_header->msg_id);
      }
    };
    collect();
    while (!(w.complete() && w.all_acked())) {
      ASSERT_LE(w.in_flight(), static_cast<size_t>(window));
      std::vector<uint32_t> pending;
      for (uint32_t m = 0; m < w.messages_sent(); ++m) {
        if (!result_done[m]) pending.push_back(m);
      }
      const bool can_ack = acked < w.messages_sent();
      if (!pending.empty() && (!can_ack || gen.Bernoulli(0.5))) {
        const uint32_t m = pending[gen.Int(0, pending.size() - 1)];
        const size_t n = w.MessageLength(m) == 0
                             ? 0
                             : std::min(msg_words, words - m * msg_words);
        ASSERT_TRUE(w.OnResultMessage(m, Iota(n, static_cast<int32_t>(5000 + m))).ok());
        result_done[m] = true;
      } else {
        ASSERT_TRUE(can_ack);
        acked = static_cast<uint32_t>(
            gen.Int(acked + 1, w.messages_sent()));
        w.OnAck(LastPsn(w, acked - 1));
        ASSERT_EQ(w.messages_acked(), acked);
      }
      collect();
    }
    ASSERT_EQ(sent_order.size(), w.num_messages());
    for (uint32_t m = 0; m < sent_order.size(); ++m) {
      ASSERT_EQ(sent_order[m], m);
    }
    for (uint32_t m = 0; m < w.num_messages(); ++m) {
      ASSERT_EQ(w.tensor()[m * msg_words].raw, static_cast<int32_t>(5000 + m));
    }
  }
}

}  // namespace
}  // namespace netreduce

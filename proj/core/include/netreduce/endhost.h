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

#ifndef NETREDUCE_ENDHOST_H_
#define NETREDUCE_ENDHOST_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/string_view.h"
#include "netreduce/fixed_point.h"
#include "netreduce/protocol.h"

namespace netreduce {

// What a worker needs from the host it runs on: a clock, a NIC queue and a
// timer wheel.
class WorkerTransport {
 public:
  virtual ~WorkerTransport() = default;

  virtual double Now() const = 0;
  // Queues `pkt` on the NIC. Returns the time its last bit leaves the host.
  virtual double Send(Packet pkt) = 0;
  // Requests OnTimeout(msg_id, generation) at absolute time `at`.
  virtual void ArmTimer(uint32_t msg_id, uint64_t generation, double at) = 0;
  virtual void Trace(absl::string_view /*event*/, uint32_t /*msg_id*/,
                     uint32_t /*psn*/) {}
};

struct WorkerConfig {
  uint16_t ring_id = 0;
  // Messages allowed in flight before the first result credit returns.
  int window = 2;
  // Words per message; the last message of a tensor may be shorter.
  size_t msg_words = 0;
  size_t pmtu_bytes = 1024;
  // PSN of the first packet on both the send and the receive connection.
  uint32_t base_psn = 0;
  double retransmit_timeout = 1e-3;

  // Headers of the connection to the ring successor (dst_qp is the
  // successor's receive QP).
  TransportHeaders send_headers;
  // Local QP on which acknowledgements for `send_headers` arrive.
  uint32_t send_qp = 0;
  // Local QP receiving the connection from the ring predecessor.
  uint32_t recv_qp = 0;
  // Headers for acknowledgements sent back to the predecessor.
  TransportHeaders ack_headers;
};

struct WorkerStats {
  uint64_t messages_sent = 0;
  uint64_t retransmissions = 0;
  uint64_t packets_sent = 0;
  uint64_t acks_sent = 0;
  uint64_t out_of_order_drops = 0;
  uint64_t duplicate_packets = 0;
  size_t max_in_flight = 0;
};

// One end-host's participation in one aggregation ring: the sliding-window
// sender towards the ring successor and the RC receiver for results arriving
// from the predecessor.
//
// A message X is sent once the aggregation result of X - N has been received
// and the successor has acknowledged X - N. Unacknowledged messages are
// retransmitted whole, with their original PSNs, when their timer fires.
class Worker {
 public:
  Worker(WorkerConfig config, std::vector<FixedWord> tensor,
         WorkerTransport* transport);

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  // Sends the first min(N, NumMsg) messages.
  void Start();

  // Dispatches a data packet on the receive connection or an ACK on the send
  // connection.
  absl::Status OnPacket(const Packet& pkt);

  // Stores a fully reassembled result and releases the next message if its
  // credit is complete.
  absl::Status OnResultMessage(uint32_t msg_id,
                               std::vector<FixedWord> payload);

  // Cumulative acknowledgement from the successor.
  void OnAck(uint32_t acked_psn);

  // Returns true when the timer was live and the message was retransmitted.
  bool OnTimeout(uint32_t msg_id, uint64_t generation);

  uint32_t num_messages() const { return num_messages_; }
  uint32_t messages_sent() const { return next_send_; }
  uint32_t results_received() const { return results_count_; }
  uint32_t messages_acked() const { return acked_count_; }
  bool complete() const { return results_count_ == num_messages_; }
  bool all_acked() const { return acked_count_ == num_messages_; }
  double completion_time() const { return completion_time_; }
  size_t in_flight() const { return next_send_ - results_count_; }

  const std::vector<FixedWord>& input() const { return input_; }
  // Tensor[RingID][*]: inputs overwritten by aggregation results.
  const std::vector<FixedWord>& tensor() const { return tensor_; }
  const WorkerConfig& config() const { return config_; }
  const WorkerStats& stats() const { return stats_; }

  uint32_t MessagePsn0(uint32_t msg_id) const;
  uint16_t MessageLength(uint32_t msg_id) const;
  // Lowest message without a stored result, or num_messages().
  uint32_t FirstMissingResult() const;

 private:
  bool HasCredit(uint32_t msg_id) const;
  void TrySend();
  void SendMessage(uint32_t msg_id, bool retransmit);
  void SendAck(uint32_t psn);
  absl::Status OnDataPacket(const Packet& pkt);
  size_t MessageWordBegin(uint32_t msg_id) const;
  size_t MessageWordEnd(uint32_t msg_id) const;

  WorkerConfig config_;
  std::vector<FixedWord> input_;
  std::vector<FixedWord> tensor_;
  WorkerTransport* transport_;
  uint32_t num_messages_ = 0;
  uint16_t full_msg_len_ = 0;

  // Sender.
  uint32_t next_send_ = 0;
  uint32_t acked_count_ = 0;
  std::vector<uint64_t> generation_;
  std::vector<bool> result_received_;
  uint32_t results_count_ = 0;
  double completion_time_ = 0.0;

  // Receiver.
  uint32_t expected_psn_ = 0;
  bool assembling_ = false;
  uint32_t assembling_msg_ = 0;
  uint16_t assembling_len_ = 0;
  uint16_t assembled_packets_ = 0;
  std::vector<FixedWord> assembly_;
  bool any_acked_ = false;

  WorkerStats stats_;
};

}  // namespace netreduce

#endif  // NETREDUCE_ENDHOST_H_

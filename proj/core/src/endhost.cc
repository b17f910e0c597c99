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
#include <utility>

#include "absl/strings/str_format.h"

namespace netreduce {

Worker::Worker(WorkerConfig config, std::vector<FixedWord> tensor,
               WorkerTransport* transport)
    : config_(std::move(config)),
      input_(std::move(tensor)),
      tensor_(input_),
      transport_(transport) {
  if (config_.msg_words > 0 && !input_.empty()) {
    num_messages_ = static_cast<uint32_t>(
        (input_.size() + config_.msg_words - 1) / config_.msg_words);
  }
  full_msg_len_ = static_cast<uint16_t>(
      PacketsPerMessage(config_.msg_words * kWordBytes, config_.pmtu_bytes));
  generation_.assign(num_messages_, 0);
  result_received_.assign(num_messages_, false);
  expected_psn_ = config_.base_psn;
}

size_t Worker::MessageWordBegin(uint32_t msg_id) const {
  return static_cast<size_t>(msg_id) * config_.msg_words;
}

size_t Worker::MessageWordEnd(uint32_t msg_id) const {
  return std::min(input_.size(), MessageWordBegin(msg_id) + config_.msg_words);
}

uint32_t Worker::MessagePsn0(uint32_t msg_id) const {
  return PsnAdd(config_.base_psn, msg_id * uint32_t{full_msg_len_});
}

uint16_t Worker::MessageLength(uint32_t msg_id) const {
  const size_t words = MessageWordEnd(msg_id) - MessageWordBegin(msg_id);
  return static_cast<uint16_t>(
      PacketsPerMessage(words * kWordBytes, config_.pmtu_bytes));
}

uint32_t Worker::FirstMissingResult() const {
  for (uint32_t m = 0; m < num_messages_; ++m) {
    if (!result_received_[m]) return m;
  }
  return num_messages_;
}

bool Worker::HasCredit(uint32_t msg_id) const {
  const uint32_t window = static_cast<uint32_t>(std::max(config_.window, 1));
  if (msg_id < window) return true;
  const uint32_t credit_msg = msg_id - window;
  return result_received_[credit_msg] && credit_msg < acked_count_;
}

void Worker::Start() { TrySend(); }

void Worker::TrySend() {
  while (next_send_ < num_messages_ && HasCredit(next_send_)) {
    SendMessage(next_send_, /*retransmit=*/false);
    ++next_send_;
    ++stats_.messages_sent;
    stats_.max_in_flight = std::max(stats_.max_in_flight, in_flight());
  }
}

void Worker::SendMessage(uint32_t msg_id, bool retransmit) {
  const std::span<const FixedWord> words(
      input_.data() + MessageWordBegin(msg_id),
      MessageWordEnd(msg_id) - MessageWordBegin(msg_id));
  auto packets = SegmentMessage(config_.ring_id, msg_id, words,
                                config_.pmtu_bytes, MessagePsn0(msg_id),
                                config_.send_headers);
  // Sizes are fixed at construction, so segmentation cannot fail here.
  if (!packets.ok()) return;
  transport_->Trace(retransmit ? "retransmit" : "send", msg_id,
                    MessagePsn0(msg_id));
  double departure = transport_->Now();
  for (Packet& p : *packets) {
    departure = transport_->Send(std::move(p));
    ++stats_.packets_sent;
  }
  const uint64_t gen = ++generation_[msg_id];
  transport_->ArmTimer(msg_id, gen, departure + config_.retransmit_timeout);
}

void Worker::SendAck(uint32_t psn) {
  Packet ack;
  ack.transport = config_.ack_headers;
  ack.transport.opcode = Opcode::kAck;
  ack.transport.psn = psn;
  transport_->Send(std::move(ack));
  ++stats_.acks_sent;
}

absl::Status Worker::OnPacket(const Packet& pkt) {
  if (pkt.transport.opcode == Opcode::kAck &&
      pkt.transport.dst_qp == config_.send_qp) {
    OnAck(pkt.transport.psn);
    return absl::OkStatus();
  }
  if (pkt.transport.opcode == Opcode::kData &&
      pkt.transport.dst_qp == config_.recv_qp) {
    return OnDataPacket(pkt);
  }
  return absl::InvalidArgumentError(absl::StrFormat(
      "ring %d: packet for QP %d is not addressed to this worker",
      config_.ring_id, pkt.transport.dst_qp));
}

absl::Status Worker::OnDataPacket(const Packet& pkt) {
  const uint32_t psn = pkt.transport.psn;
  if (psn != expected_psn_) {
    if (PsnBefore(psn, expected_psn_)) {
      ++stats_.duplicate_packets;
      // A retransmitted message: repeat the cumulative acknowledgement once
      // per message so the sender can stop.
      if (pkt.nr_header.has_value() && any_acked_) {
        SendAck(PsnAdd(expected_psn_, kPsnModulus - 1));
      }
    } else {
      ++stats_.out_of_order_drops;
    }
    return absl::OkStatus();
  }

  if (!assembling_) {
    if (!pkt.nr_header.has_value() || !pkt.nr_header->IsValid()) {
      return absl::DataLossError(absl::StrFormat(
          "ring %d: in-order PSN %d starts a message without a header",
          config_.ring_id, psn));
    }
    assembling_ = true;
    assembling_msg_ = pkt.nr_header->msg_id;
    assembling_len_ = pkt.nr_header->msg_len;
    assembled_packets_ = 0;
    assembly_.clear();
  }
  assembly_.insert(assembly_.end(), pkt.payload.begin(), pkt.payload.end());
  ++assembled_packets_;
  expected_psn_ = PsnAdd(expected_psn_, 1);
  if (assembled_packets_ < assembling_len_) return absl::OkStatus();

  assembling_ = false;
  absl::Status s = OnResultMessage(assembling_msg_, std::move(assembly_));
  assembly_ = {};
  SendAck(psn);
  any_acked_ = true;
  return s;
}

absl::Status Worker::OnResultMessage(uint32_t msg_id,
                                     std::vector<FixedWord> payload) {
  if (msg_id >= num_messages_ || msg_id >= next_send_) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "ring %d: result for message %d that was never sent (sent %d of %d)",
        config_.ring_id, msg_id, next_send_, num_messages_));
  }
  if (result_received_[msg_id]) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "ring %d: second result for message %d", config_.ring_id, msg_id));
  }
  const size_t begin = MessageWordBegin(msg_id);
  const size_t end = MessageWordEnd(msg_id);
  if (payload.size() != end - begin) {
    return absl::DataLossError(absl::StrFormat(
        "ring %d: result for message %d has %d words, expected %d",
        config_.ring_id, msg_id, payload.size(), end - begin));
  }
  std::copy(payload.begin(), payload.end(), tensor_.begin() + begin);
  result_received_[msg_id] = true;
  ++results_count_;
  transport_->Trace("result", msg_id, MessagePsn0(msg_id));
  if (complete()) completion_time_ = transport_->Now();
  TrySend();
  return absl::OkStatus();
}

void Worker::OnAck(uint32_t acked_psn) {
  const uint32_t before = acked_count_;
  while (acked_count_ < next_send_) {
    const uint32_t last = PsnAdd(MessagePsn0(acked_count_),
                                 MessageLength(acked_count_) - 1u);
    if (PsnBefore(acked_psn, last)) break;
    ++acked_count_;
  }
  if (acked_count_ != before) {
    transport_->Trace("ack", acked_count_ - 1, acked_psn);
    TrySend();
  }
}

bool Worker::OnTimeout(uint32_t msg_id, uint64_t generation) {
  if (msg_id >= num_messages_ || generation != generation_[msg_id] ||
      msg_id < acked_count_) {
    return false;
  }
  transport_->Trace("timeout", msg_id, MessagePsn0(msg_id));
  ++stats_.retransmissions;
  SendMessage(msg_id, /*retransmit=*/true);
  return true;
}

}  // namespace netreduce

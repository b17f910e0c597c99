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

#include "netreduce/header_manager.h"

#include <utility>

#include "absl/strings/str_format.h"

namespace netreduce {

HeaderManager::HeaderManager(HeaderManagerOptions options)
    : options_(std::move(options)) {}

void HeaderManager::RewriteUpstream(TransportHeaders& t) const {
  t.src_mac = options_.self.mac;
  t.src_ip = options_.self.ip;
  t.dst_mac = options_.spine.mac;
  t.dst_ip = options_.spine.ip;
}

void HeaderManager::SwapAddresses(TransportHeaders& t) {
  std::swap(t.src_mac, t.dst_mac);
  std::swap(t.src_ip, t.dst_ip);
}

std::optional<Packet> HeaderManager::ShipHeaders(const Packet& original) {
  StashedHeaders headers{original.transport, original.nr_header};
  auto it = options_.leaf_of_worker.find(original.transport.dst_ip);
  if (it == options_.leaf_of_worker.end() ||
      it->second.ip == options_.self.ip) {
    Stash(headers);
    return std::nullopt;
  }
  Packet control;
  control.transport.src_mac = options_.self.mac;
  control.transport.src_ip = options_.self.ip;
  control.transport.dst_mac = it->second.mac;
  control.transport.dst_ip = it->second.ip;
  control.transport.dst_qp = original.transport.dst_qp;
  control.transport.psn = original.transport.psn;
  control.transport.opcode = Opcode::kHeaderStash;
  control.stashed = std::move(headers);
  return control;
}

absl::StatusOr<std::vector<Packet>> HeaderManager::Manage(Packet pkt) {
  std::vector<Packet> out;
  const bool to_self = pkt.transport.dst_ip == options_.self.ip;

  if (options_.role == SwitchRole::kSpine) {
    if (to_self) SwapAddresses(pkt.transport);
    out.push_back(std::move(pkt));
    return out;
  }

  if (to_self) {
    if (pkt.transport.opcode == Opcode::kHeaderStash) {
      if (!pkt.stashed.has_value()) {
        return absl::InvalidArgumentError("stash control without headers");
      }
      Stash(*pkt.stashed);
      return out;
    }
    auto restored = Take(pkt.transport.dst_qp, pkt.transport.psn);
    if (!restored.ok()) return restored.status();
    pkt.transport = restored->transport;
    pkt.nr_header = restored->nr_header;
    out.push_back(std::move(pkt));
    return out;
  }

  if (single_switch()) {
    out.push_back(std::move(pkt));
    return out;
  }
  if (auto control = ShipHeaders(pkt); control.has_value()) {
    out.push_back(*std::move(control));
  }
  RewriteUpstream(pkt.transport);
  out.push_back(std::move(pkt));
  return out;
}

void HeaderManager::Stash(const StashedHeaders& headers) {
  stash_[{headers.transport.dst_qp, headers.transport.psn}] = headers;
}

absl::StatusOr<StashedHeaders> HeaderManager::Take(uint32_t dst_qp,
                                                   uint32_t psn) {
  auto it = stash_.find({dst_qp, psn});
  if (it == stash_.end()) {
    return absl::NotFoundError(absl::StrFormat(
        "no stashed headers for DstQP %d PSN %d at %s", dst_qp, psn,
        FormatIp(options_.self.ip)));
  }
  StashedHeaders h = std::move(it->second);
  stash_.erase(it);
  return h;
}

bool HeaderManager::Erase(uint32_t dst_qp, uint32_t psn) {
  return stash_.erase({dst_qp, psn}) > 0;
}

bool HeaderManager::Contains(uint32_t dst_qp, uint32_t psn) const {
  return stash_.contains({dst_qp, psn});
}

std::vector<StashedHeaders> HeaderManager::StashContents() const {
  std::vector<StashedHeaders> out;
  out.reserve(stash_.size());
  for (const auto& [key, headers] : stash_) out.push_back(headers);
  return out;
}

}  // namespace netreduce

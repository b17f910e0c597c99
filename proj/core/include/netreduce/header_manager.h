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

#ifndef NETREDUCE_HEADER_MANAGER_H_
#define NETREDUCE_HEADER_MANAGER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "netreduce/protocol.h"

namespace netreduce {

enum class SwitchRole { kLeaf, kSpine };

struct SwitchAddress {
  uint32_t ip = 0;
  uint64_t mac = 0;
};

struct HeaderManagerOptions {
  SwitchRole role = SwitchRole::kLeaf;
  SwitchAddress self;
  // Machines under this leaf, and in the whole job.
  int local_size = 1;
  int global_size = 1;
  // Spine bound to this leaf at job initialisation.
  SwitchAddress spine;
  // Leaf serving each worker IP; used to route stash headers.
  std::map<uint32_t, SwitchAddress> leaf_of_worker;
};

// Header rewriting for two-level aggregation.
//
// Upstream, a leaf ships the original worker-bound headers to the leaf that
// serves the destination worker and readdresses the data packet from itself
// to the spine. The spine swaps source and destination back. Downstream, the
// destination leaf restores the stashed headers keyed by {DstQP, PSN}.
class HeaderManager {
 public:
  explicit HeaderManager(HeaderManagerOptions options);

  bool single_switch() const {
    return options_.local_size == options_.global_size;
  }
  const HeaderManagerOptions& options() const { return options_; }

  // Applies the header rules to one packet. Upstream on a leaf this yields the
  // stash control packet (unless the destination leaf is this leaf, in which
  // case the headers are stashed locally) followed by the rewritten packet.
  // A kHeaderStash packet addressed to this leaf is consumed.
  absl::StatusOr<std::vector<Packet>> Manage(Packet pkt);

  // Control packet carrying `original`'s headers to the leaf serving its
  // destination. Returns nullopt after stashing locally when that leaf is
  // this one.
  std::optional<Packet> ShipHeaders(const Packet& original);
  void RewriteUpstream(TransportHeaders& t) const;
  static void SwapAddresses(TransportHeaders& t);

  void Stash(const StashedHeaders& headers);
  // Removes and returns the stash entry for {dst_qp, psn}.
  absl::StatusOr<StashedHeaders> Take(uint32_t dst_qp, uint32_t psn);
  bool Erase(uint32_t dst_qp, uint32_t psn);
  bool Contains(uint32_t dst_qp, uint32_t psn) const;
  size_t stash_size() const { return stash_.size(); }
  // Snapshot of stashed headers in key order.
  std::vector<StashedHeaders> StashContents() const;

 private:
  HeaderManagerOptions options_;
  std::map<std::pair<uint32_t, uint32_t>, StashedHeaders> stash_;
};

}  // namespace netreduce

#endif  // NETREDUCE_HEADER_MANAGER_H_

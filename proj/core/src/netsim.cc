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

#include "netreduce/netsim.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace netreduce {

double UnitUniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

uint64_t Fnv1a(absl::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Link::Link(std::string name, double bandwidth, double propagation,
           double loss_rate, uint64_t seed)
    : name_(std::move(name)),
      bandwidth_(bandwidth),
      propagation_(propagation),
      loss_rate_(loss_rate),
      rng_(seed + Fnv1a(name_)) {}

Link::Result Link::Transmit(const Packet& pkt, double t) {
  const double start = std::max(free_at_, t);
  free_at_ = start + static_cast<double>(pkt.SizeBytes()) / bandwidth_;
  ++stats_.transmitted;
  stats_.bytes += pkt.SizeBytes();
  stats_.payload_bytes += pkt.PayloadBytes();
  Result r{free_at_, std::nullopt};
  // Draw unconditionally so the loss pattern does not depend on the filter.
  const bool lost = loss_rate_ > 0.0 && UnitUniform(rng_) < loss_rate_;
  if (lost || (drop_filter_ && drop_filter_(pkt))) {
    ++stats_.dropped;
    return r;
  }
  ++stats_.delivered;
  r.arrival = free_at_ + propagation_;
  return r;
}

void EventQueue::Push(double time, SimEvent event) {
  heap_.push(Entry{time, next_seq_++, std::move(event)});
}

std::pair<double, SimEvent> EventQueue::Pop() {
  const Entry& top = heap_.top();
  std::pair<double, SimEvent> out{top.time, std::move(top.event)};
  heap_.pop();
  return out;
}

uint32_t HostIp(int host) { return 0x0A000001u + host; }
uint32_t LeafIp(int leaf) { return 0x0A010001u + leaf; }
uint32_t SpineIp() { return 0x0A020001u; }
uint64_t HostMac(int host) { return 0x020000000000ull + host; }
uint64_t LeafMac(int leaf) { return 0x020001000000ull + leaf; }
uint64_t SpineMac() { return 0x020002000000ull; }
uint32_t SendQp(int host, int ring, int rings) {
  return 0x100u + static_cast<uint32_t>(host * rings + ring) * 2;
}
uint32_t RecvQp(int host, int ring, int rings) {
  return SendQp(host, ring, rings) + 1;
}

absl::Status ValidateSimConfig(const SimConfig& c) {
  if (c.hosts < 2) {
    return absl::InvalidArgumentError("need at least 2 hosts");
  }
  if (c.rings < 1 || c.rings > 0xFFFF) {
    return absl::InvalidArgumentError("rings must be in [1, 65535]");
  }
  if (c.window < 1) {
    return absl::InvalidArgumentError("window must be at least 1");
  }
  if (c.msg_packets < 1 || c.msg_packets > 0xFFFF) {
    return absl::InvalidArgumentError("msg_packets must be in [1, 65535]");
  }
  if (c.pmtu_bytes < static_cast<int>(kWordBytes) ||
      c.pmtu_bytes % kWordBytes != 0) {
    return absl::InvalidArgumentError(
        "pmtu_bytes must be a positive multiple of 4");
  }
  if (c.tensor_bytes == 0 || c.tensor_bytes % (kWordBytes * c.rings) != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "tensor_bytes (%d) must be a positive multiple of 4 * rings",
        c.tensor_bytes));
  }
  if (!(c.link_bandwidth > 0) || !(c.propagation >= 0) ||
      !(c.accel_latency >= 0)) {
    return absl::InvalidArgumentError(
        "bandwidth must be positive and delays non-negative");
  }
  if (!(c.loss_rate >= 0) || !(c.loss_rate < 1)) {
    return absl::InvalidArgumentError("loss_rate must be in [0, 1)");
  }
  if (c.fraction_bits < 0 || c.fraction_bits > kMaxFractionBits) {
    return absl::InvalidArgumentError("fraction_bits out of range");
  }
  if (c.base_psn >= kPsnModulus) {
    return absl::InvalidArgumentError("base_psn must be below 2^24");
  }
  if (c.retransmit_timeout < 0) {
    return absl::InvalidArgumentError("retransmit_timeout must be >= 0");
  }
  if (c.topology == Topology::kSpineLeaf) {
    if (c.leaves < 1 || c.hosts % c.leaves != 0) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "%d hosts do not divide evenly over %d leaves", c.hosts, c.leaves));
    }
  }
  const uint64_t words = c.tensor_bytes / kWordBytes / c.rings;
  const uint64_t msg_words =
      static_cast<uint64_t>(c.msg_packets) * (c.pmtu_bytes / kWordBytes);
  const uint64_t messages = (words + msg_words - 1) / msg_words;
  if (messages * c.msg_packets >= kPsnModulus / 2) {
    return absl::InvalidArgumentError(
        "tensor spans more than half the PSN space");
  }
  return absl::OkStatus();
}

namespace {

bool TwoLevel(const SimConfig& c) {
  return c.topology == Topology::kSpineLeaf && c.leaves > 1;
}

}  // namespace

double AnalyticMessageRtt(const SimConfig& c) {
  const double bw = c.link_bandwidth;
  const double t_pkt = (c.pmtu_bytes + kTransportHeaderBytes) / bw;
  const double t_ack =
      static_cast<double>(kTransportHeaderBytes + kAethBytes) / bw;
  const uint64_t words = c.tensor_bytes / kWordBytes / c.rings;
  const uint64_t packets =
      PacketsPerMessage(words * kWordBytes, c.pmtu_bytes);
  const double msg_len =
      static_cast<double>(std::min<uint64_t>(c.msg_packets, packets));
  const int hops = TwoLevel(c) ? 4 : 2;
  const int switches = TwoLevel(c) ? 3 : 1;
  const double t_msg = msg_len * t_pkt * c.rings;
  const double one_way = hops * c.propagation + switches * c.accel_latency +
                         (hops - 1) * t_pkt;
  const double ack_way = hops * c.propagation + switches * c.accel_latency +
                         hops * t_ack;
  return t_msg + one_way + ack_way;
}

std::vector<FixedWord> MakeHostInput(uint64_t seed, int host, int ring,
                                     size_t words, int fraction_bits) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull +
                      Fnv1a(absl::StrFormat("input/%d/%d", host, ring)));
  std::vector<FixedWord> out(words);
  for (FixedWord& w : out) {
    const double x = 2.0 * UnitUniform(rng) - 1.0;
    w = Quantize(x, fraction_bits).value_or(FixedWord{0});
  }
  return out;
}

std::string SimReportToCsv(const SimReport& r) {
  std::string out = "metric,entity,value\n";
  auto row = [&](absl::string_view metric, absl::string_view entity,
                 double value) {
    absl::StrAppendFormat(&out, "%s,%s,%.10g\n", metric, entity, value);
  };
  row("completion_s", "all", r.completion_s);
  for (size_t h = 0; h < r.host_completion_s.size(); ++h) {
    row("host_completion_s", absl::StrCat("host", h), r.host_completion_s[h]);
  }
  for (size_t h = 0; h < r.host_uplink_payload_bytes.size(); ++h) {
    row("host_uplink_payload_bytes", absl::StrCat("host", h),
        static_cast<double>(r.host_uplink_payload_bytes[h]));
  }
  for (const LinkReport& l : r.links) {
    row("link_transmitted", l.name, static_cast<double>(l.stats.transmitted));
    row("link_delivered", l.name, static_cast<double>(l.stats.delivered));
    row("link_dropped", l.name, static_cast<double>(l.stats.dropped));
    row("link_bytes", l.name, static_cast<double>(l.stats.bytes));
    row("link_payload_bytes", l.name,
        static_cast<double>(l.stats.payload_bytes));
  }
  row("retransmissions", "all", static_cast<double>(r.retransmissions));
  row("timeouts", "all", static_cast<double>(r.timeouts));
  row("events", "all", static_cast<double>(r.events));
  const AcceleratorStats& a = r.accelerator;
  row("accel_packets_in", "all", static_cast<double>(a.packets_in));
  row("accel_passthrough", "all", static_cast<double>(a.passthrough));
  row("accel_aggregations", "all", static_cast<double>(a.aggregations));
  row("accel_history_replays", "all", static_cast<double>(a.history_replays));
  row("accel_duplicate_discards", "all",
      static_cast<double>(a.duplicate_discards));
  row("accel_early_discards", "all", static_cast<double>(a.early_discards));
  row("accel_stale_discards", "all", static_cast<double>(a.stale_discards));
  row("accel_unrecoverable_discards", "all",
      static_cast<double>(a.unrecoverable_discards));
  row("accel_exactly_once_violations", "all",
      static_cast<double>(a.exactly_once_violations));
  row("accel_live_clear_violations", "all",
      static_cast<double>(a.live_clear_violations));
  row("accel_upstream_sent", "all", static_cast<double>(a.upstream_sent));
  row("accel_upstream_resends", "all",
      static_cast<double>(a.upstream_resends));
  row("accel_restores", "all", static_cast<double>(a.restores));
  row("accel_missing_stash", "all", static_cast<double>(a.missing_stash));
  row("stash_residual", "all", static_cast<double>(r.stash_residual));
  row("max_in_flight", "all", static_cast<double>(r.max_in_flight));
  return out;
}

std::string HostEventsToCsv(const std::vector<HostEvent>& events) {
  std::string out = "time,host,event,msg_id,psn\n";
  for (const HostEvent& e : events) {
    absl::StrAppendFormat(&out, "%.12g,%d,%s,%d,%d\n", e.time, e.host, e.event,
                          e.msg_id, e.psn);
  }
  return out;
}

std::string AcceleratorTraceToCsv(
    const std::vector<AcceleratorTraceRow>& rows) {
  std::string out = "time,switch,classification,ring,host,msg,offset,action\n";
  for (const AcceleratorTraceRow& r : rows) {
    const auto& w = r.record.where;
    if (w.has_value()) {
      absl::StrAppendFormat(&out, "%.12g,%s,%s,%d,%d,%d,%d,%s\n", r.time,
                            r.switch_name, PacketClassName(r.record.klass),
                            w->ring_id, w->host_id, w->msg_id, w->offset,
                            r.record.action);
    } else {
      absl::StrAppendFormat(&out, "%.12g,%s,%s,,,,,%s\n", r.time,
                            r.switch_name, PacketClassName(r.record.klass),
                            r.record.action);
    }
  }
  return out;
}

// WorkerTransport for one (host, ring) pair.
class Simulation::HostPort : public WorkerTransport {
 public:
  HostPort(Simulation* sim, int host, int ring)
      : sim_(sim), host_(host), ring_(ring) {}

  double Now() const override { return sim_->now_; }
  double Send(Packet pkt) override {
    return sim_->NicEnqueue(host_, std::move(pkt));
  }
  void ArmTimer(uint32_t msg_id, uint64_t generation, double at) override {
    sim_->queue_.Push(at, TimerFire{host_, ring_, msg_id, generation});
  }
  void Trace(absl::string_view event, uint32_t msg_id, uint32_t psn) override {
    if (!sim_->config_.trace) return;
    sim_->event_log_.push_back(
        HostEvent{sim_->now_, host_, std::string(event), msg_id, psn});
  }

 private:
  Simulation* sim_;
  int host_;
  int ring_;
};

struct Simulation::SwitchNode {
  std::string name;
  std::unique_ptr<Accelerator> accel;
  std::map<uint32_t, Hop> routes;
  std::optional<Hop> default_route;
};

Simulation::Simulation(SimConfig config) : config_(std::move(config)) {}
Simulation::~Simulation() = default;

absl::StatusOr<std::unique_ptr<Simulation>> Simulation::Create(
    SimConfig config) {
  if (absl::Status s = ValidateSimConfig(config); !s.ok()) return s;
  std::unique_ptr<Simulation> sim(new Simulation(std::move(config)));
  if (absl::Status s = sim->Build(); !s.ok()) return s;
  return sim;
}

Link& Simulation::AddLink(const std::string& name) {
  links_.push_back(std::make_unique<Link>(name, config_.link_bandwidth,
                                          config_.propagation,
                                          config_.loss_rate, config_.seed));
  return *links_.back();
}

absl::Status Simulation::Build() {
  const SimConfig& c = config_;
  const int H = c.hosts;
  words_per_ring_ = c.tensor_bytes / kWordBytes / c.rings;
  const size_t msg_words = static_cast<size_t>(c.msg_packets) *
                           (c.pmtu_bytes / kWordBytes);
  const int msg_len = static_cast<int>(std::min<size_t>(
      c.msg_packets,
      PacketsPerMessage(words_per_ring_ * kWordBytes, c.pmtu_bytes)));

  std::vector<uint32_t> host_ips;
  for (int h = 0; h < H; ++h) host_ips.push_back(HostIp(h));

  auto base_options = [&](AcceleratorRole role, SwitchAddress self,
                          int rows) {
    AcceleratorOptions o;
    o.role = role;
    o.self = self;
    o.window = c.window;
    o.max_msg_len = msg_len;
    o.rings = c.rings;
    o.hosts_per_ring = rows;
    return o;
  };

  host_uplink_.resize(H);
  nics_.resize(H);
  host_switch_.resize(H);
  if (!TwoLevel(c)) {
    auto sw = std::make_unique<SwitchNode>();
    sw->name = "tor";
    AcceleratorOptions o =
        base_options(AcceleratorRole::kTor, {LeafIp(0), LeafMac(0)}, H);
    o.member_ips = host_ips;
    sw->accel = std::make_unique<Accelerator>(std::move(o));
    for (int h = 0; h < H; ++h) {
      host_uplink_[h] = Hop{&AddLink(absl::StrFormat("h%d->tor", h)), H};
      host_switch_[h] = H;
      sw->routes[HostIp(h)] = Hop{&AddLink(absl::StrFormat("tor->h%d", h)), h};
    }
    switches_.push_back(std::move(sw));
  } else {
    const int L = c.leaves;
    const int per_leaf = H / L;
    const int spine_node = H + L;
    std::map<uint32_t, SwitchAddress> leaf_of_worker;
    for (int h = 0; h < H; ++h) {
      leaf_of_worker[HostIp(h)] = {LeafIp(h / per_leaf), LeafMac(h / per_leaf)};
    }
    auto spine = std::make_unique<SwitchNode>();
    spine->name = "spine";
    {
      AcceleratorOptions o =
          base_options(AcceleratorRole::kSpine, {SpineIp(), SpineMac()}, L);
      for (int l = 0; l < L; ++l) o.member_ips.push_back(LeafIp(l));
      spine->accel = std::make_unique<Accelerator>(std::move(o));
    }
    for (int l = 0; l < L; ++l) {
      auto leaf = std::make_unique<SwitchNode>();
      leaf->name = absl::StrFormat("leaf%d", l);
      AcceleratorOptions o = base_options(AcceleratorRole::kLeaf,
                                          {LeafIp(l), LeafMac(l)}, per_leaf);
      o.header.local_size = per_leaf;
      o.header.global_size = H;
      o.header.spine = {SpineIp(), SpineMac()};
      o.header.leaf_of_worker = leaf_of_worker;
      for (int h = l * per_leaf; h < (l + 1) * per_leaf; ++h) {
        o.member_ips.push_back(HostIp(h));
        for (int r = 0; r < c.rings; ++r) {
          o.local_destination_qps[static_cast<uint16_t>(r)].push_back(
              RecvQp(h, r, c.rings));
        }
        host_uplink_[h] =
            Hop{&AddLink(absl::StrFormat("h%d->leaf%d", h, l)), H + l};
        host_switch_[h] = H + l;
        leaf->routes[HostIp(h)] =
            Hop{&AddLink(absl::StrFormat("leaf%d->h%d", l, h)), h};
      }
      leaf->accel = std::make_unique<Accelerator>(std::move(o));
      leaf->default_route =
          Hop{&AddLink(absl::StrFormat("leaf%d->spine", l)), spine_node};
      Hop down{&AddLink(absl::StrFormat("spine->leaf%d", l)), H + l};
      spine->routes[LeafIp(l)] = down;
      for (int h = l * per_leaf; h < (l + 1) * per_leaf; ++h) {
        spine->routes[HostIp(h)] = down;
      }
      switches_.push_back(std::move(leaf));
    }
    switches_.push_back(std::move(spine));
  }

  if (c.trace) {
    for (auto& sw : switches_) {
      const std::string name = sw->name;
      sw->accel->set_tracer([this, name](const AcceleratorTraceRecord& rec) {
        accel_trace_.push_back(AcceleratorTraceRow{now_, name, rec});
      });
    }
  }

  const double timeout = c.retransmit_timeout > 0
                             ? c.retransmit_timeout
                             : 10.0 * AnalyticMessageRtt(c);
  ports_.resize(H);
  workers_.resize(H);
  for (int h = 0; h < H; ++h) {
    const int succ = (h + 1) % H;
    const int pred = (h + H - 1) % H;
    for (int r = 0; r < c.rings; ++r) {
      ports_[h].push_back(std::make_unique<HostPort>(this, h, r));
      WorkerConfig wc;
      wc.ring_id = static_cast<uint16_t>(r);
      wc.window = c.window;
      wc.msg_words = msg_words;
      wc.pmtu_bytes = c.pmtu_bytes;
      wc.base_psn = c.base_psn;
      wc.retransmit_timeout = timeout;
      wc.send_headers.src_mac = HostMac(h);
      wc.send_headers.dst_mac = HostMac(succ);
      wc.send_headers.src_ip = HostIp(h);
      wc.send_headers.dst_ip = HostIp(succ);
      wc.send_headers.dst_qp = RecvQp(succ, r, c.rings);
      wc.send_qp = SendQp(h, r, c.rings);
      wc.recv_qp = RecvQp(h, r, c.rings);
      wc.ack_headers = wc.send_headers;
      wc.ack_headers.dst_mac = HostMac(pred);
      wc.ack_headers.dst_ip = HostIp(pred);
      wc.ack_headers.dst_qp = SendQp(pred, r, c.rings);
      workers_[h].push_back(std::make_unique<Worker>(
          std::move(wc),
          MakeHostInput(c.seed, h, r, words_per_ring_, c.fraction_bits),
          ports_[h].back().get()));
    }
  }
  return absl::OkStatus();
}

void Simulation::set_drop_filter(
    std::function<bool(const std::string&, const Packet&)> filter) {
  for (auto& link : links_) {
    if (!filter) {
      link->set_drop_filter(nullptr);
      continue;
    }
    link->set_drop_filter(
        [filter, name = link->name()](const Packet& p) {
          return filter(name, p);
        });
  }
}

double Simulation::SendOn(const Hop& hop, Packet pkt, double t) {
  const Link::Result r = hop.link->Transmit(pkt, t);
  if (r.arrival.has_value()) {
    queue_.Push(*r.arrival, PacketDelivery{hop.to, std::move(pkt)});
  }
  return r.departure;
}

double Simulation::NicEnqueue(int host, Packet pkt) {
  Nic& nic = nics_[host];
  Link& link = *host_uplink_[host].link;
  nic.predicted_free = std::max(nic.predicted_free, now_) +
                       static_cast<double>(pkt.SizeBytes()) / link.bandwidth();
  (pkt.transport.opcode == Opcode::kData ? nic.data : nic.control)
      .push_back(std::move(pkt));
  if (!nic.scheduled) {
    nic.scheduled = true;
    queue_.Push(std::max(now_, link.free_at()), NicReady{host});
  }
  return nic.predicted_free;
}

void Simulation::OnNicReady(int host) {
  Nic& nic = nics_[host];
  nic.scheduled = false;
  std::deque<Packet>& q = nic.control.empty() ? nic.data : nic.control;
  if (q.empty()) return;
  SendOn(host_uplink_[host], std::move(q.front()), now_);
  q.pop_front();
  if (!nic.control.empty() || !nic.data.empty()) {
    nic.scheduled = true;
    queue_.Push(host_uplink_[host].link->free_at(), NicReady{host});
  }
}

std::optional<Simulation::Hop> Simulation::Route(const SwitchNode& sw,
                                                 uint32_t dst_ip) const {
  auto it = sw.routes.find(dst_ip);
  if (it != sw.routes.end()) return it->second;
  return sw.default_route;
}

absl::Status Simulation::OnSwitch(int index, Packet pkt) {
  SwitchNode& sw = *switches_[index];
  auto outputs = sw.accel->Process(std::move(pkt));
  if (!outputs.ok()) {
    return absl::Status(outputs.status().code(),
                        absl::StrCat(sw.name, ": ", outputs.status().message()));
  }
  const double t = now_ + config_.accel_latency;
  for (Packet& out : *outputs) {
    auto hop = Route(sw, out.transport.dst_ip);
    if (!hop.has_value()) {
      return absl::InternalError(absl::StrFormat(
          "%s has no route to %s", sw.name, FormatIp(out.transport.dst_ip)));
    }
    SendOn(*hop, std::move(out), t);
  }
  return absl::OkStatus();
}

absl::Status Simulation::OnHost(int host, Packet pkt) {
  const uint32_t qp = pkt.transport.dst_qp;
  const int rings = config_.rings;
  if (qp >= 0x100u) {
    const int index = static_cast<int>((qp - 0x100u) / 2);
    if (index / rings == host) {
      return workers_[host][index % rings]->OnPacket(pkt);
    }
  }
  return absl::InternalError(absl::StrFormat(
      "host %d received a packet for QP %d", host, qp));
}

absl::Status Simulation::Deliver(int node, Packet pkt) {
  if (node < config_.hosts) return OnHost(node, std::move(pkt));
  return OnSwitch(node - config_.hosts, std::move(pkt));
}

std::string Simulation::StuckDiagnostic() const {
  for (int h = 0; h < config_.hosts; ++h) {
    for (int r = 0; r < config_.rings; ++r) {
      const Worker& w = *workers_[h][r];
      if (!w.complete() || !w.all_acked()) {
        return absl::StrFormat(
            "host %d ring %d stuck at message %d (results %d/%d, acked %d, "
            "sent %d)",
            h, r, w.FirstMissingResult(), w.results_received(),
            w.num_messages(), w.messages_acked(), w.messages_sent());
      }
    }
  }
  return "all workers complete";
}

absl::Status Simulation::Run() {
  for (auto& host : workers_) {
    for (auto& w : host) w->Start();
  }
  uint64_t events = 0;
  while (!queue_.empty()) {
    if (events >= config_.event_cap) {
      report_.events = events;
      return absl::DeadlineExceededError(absl::StrFormat(
          "event cap %d reached at t=%.9g: %s", config_.event_cap, now_,
          StuckDiagnostic()));
    }
    auto [time, event] = queue_.Pop();
    now_ = time;
    ++events;
    if (auto* d = std::get_if<PacketDelivery>(&event)) {
      if (absl::Status s = Deliver(d->node, std::move(d->packet)); !s.ok()) {
        return absl::Status(s.code(), absl::StrFormat("t=%.9g: %s", now_,
                                                      s.message()));
      }
    } else if (auto* n = std::get_if<NicReady>(&event)) {
      OnNicReady(n->host);
    } else {
      const auto& t = std::get<TimerFire>(event);
      if (workers_[t.host][t.ring]->OnTimeout(t.msg_id, t.generation)) {
        ++report_.timeouts;
      }
    }
  }
  report_.events = events;
  Finalise();
  for (const auto& host : workers_) {
    for (const auto& w : host) {
      if (!w->complete() || !w->all_acked()) {
        return absl::InternalError(
            absl::StrCat("simulation went idle: ", StuckDiagnostic()));
      }
    }
  }
  return absl::OkStatus();
}

void Simulation::Finalise() {
  const int H = config_.hosts;
  report_.host_completion_s.assign(H, 0.0);
  report_.host_uplink_payload_bytes.assign(H, 0);
  report_.retransmissions = 0;
  report_.max_in_flight = 0;
  for (int h = 0; h < H; ++h) {
    for (const auto& w : workers_[h]) {
      report_.host_completion_s[h] =
          std::max(report_.host_completion_s[h], w->completion_time());
      report_.retransmissions += w->stats().retransmissions;
      report_.max_in_flight =
          std::max(report_.max_in_flight, w->stats().max_in_flight);
    }
    report_.host_uplink_payload_bytes[h] =
        host_uplink_[h].link->stats().payload_bytes;
  }
  report_.completion_s = *std::max_element(report_.host_completion_s.begin(),
                                           report_.host_completion_s.end());
  report_.links.clear();
  for (const auto& l : links_) {
    report_.links.push_back(LinkReport{l->name(), l->stats()});
  }
  report_.accelerator = AcceleratorStats{};
  report_.stash_residual = 0;
  for (const auto& sw : switches_) {
    report_.accelerator += sw->accel->stats();
    report_.stash_residual += sw->accel->header_manager().stash_size();
  }
}

const Worker& Simulation::worker(int host, int ring) const {
  return *workers_.at(host).at(ring);
}

const std::vector<FixedWord>& Simulation::HostInput(int host, int ring) const {
  return worker(host, ring).input();
}

const std::vector<FixedWord>& Simulation::HostResult(int host,
                                                     int ring) const {
  return worker(host, ring).tensor();
}

const Accelerator& Simulation::accelerator(int i) const {
  return *switches_.at(i)->accel;
}

absl::StatusOr<RingAllReduceReport> RunRingAllReduce(
    const RingAllReduceConfig& c) {
  const int H = c.hosts;
  if (H < 2) return absl::InvalidArgumentError("need at least 2 hosts");
  if (c.tensor_bytes % kWordBytes != 0 || c.pmtu_bytes < 4 ||
      c.pmtu_bytes % kWordBytes != 0) {
    return absl::InvalidArgumentError(
        "tensor_bytes and pmtu_bytes must be multiples of 4");
  }
  const size_t words = c.tensor_bytes / kWordBytes;
  if (words < static_cast<size_t>(H)) {
    return absl::InvalidArgumentError("tensor smaller than one word per host");
  }
  auto chunk_begin = [&](int i) { return words * i / H; };
  const int steps = 2 * (H - 1);
  const size_t pmtu_words = c.pmtu_bytes / kWordBytes;

  RingAllReduceReport report;
  report.host_uplink_payload_bytes.assign(H, 0);
  for (int h = 0; h < H; ++h) {
    report.inputs.push_back(
        MakeHostInput(c.seed, h, 0, words, c.fraction_bits));
  }
  report.results = report.inputs;

  std::vector<std::unique_ptr<Link>> up, down;
  for (int h = 0; h < H; ++h) {
    up.push_back(std::make_unique<Link>(absl::StrFormat("h%d->sw", h),
                                        c.link_bandwidth, c.propagation, 0.0,
                                        c.seed));
    down.push_back(std::make_unique<Link>(absl::StrFormat("sw->h%d", h),
                                          c.link_bandwidth, c.propagation,
                                          0.0, c.seed));
  }
  EventQueue queue;
  const int switch_node = H;
  // Chunk index host h sends at step s.
  auto chunk_of = [&](int h, int s) {
    const int k = s < H - 1 ? h - s : h + 1 - (s - (H - 1));
    return ((k % H) + H) % H;
  };
  auto send_step = [&](int h, int s, double t) {
    const int k = chunk_of(h, s);
    const int succ = (h + 1) % H;
    for (size_t b = chunk_begin(k); b < chunk_begin(k + 1); b += pmtu_words) {
      const size_t e = std::min(chunk_begin(k + 1), b + pmtu_words);
      Packet p;
      p.transport.src_ip = HostIp(h);
      p.transport.dst_ip = HostIp(succ);
      p.payload.assign(report.results[h].begin() + b,
                       report.results[h].begin() + e);
      report.host_uplink_payload_bytes[h] += p.PayloadBytes();
      const Link::Result r = up[h]->Transmit(p, t);
      queue.Push(*r.arrival, PacketDelivery{switch_node, std::move(p)});
    }
  };

  std::vector<int> recv_step(H, 0);
  std::vector<size_t> recv_words(H, 0);
  std::vector<double> done(H, 0.0);
  for (int h = 0; h < H; ++h) send_step(h, 0, 0.0);
  while (!queue.empty()) {
    auto [now, event] = queue.Pop();
    auto& d = std::get<PacketDelivery>(event);
    if (d.node == switch_node) {
      const int dst = static_cast<int>(d.packet.transport.dst_ip - HostIp(0));
      const Link::Result r =
          down[dst]->Transmit(d.packet, now + c.switch_latency);
      queue.Push(*r.arrival, PacketDelivery{dst, std::move(d.packet)});
      continue;
    }
    const int h = d.node;
    const int s = recv_step[h];
    const int k = chunk_of((h + H - 1) % H, s);
    const size_t at = chunk_begin(k) + recv_words[h];
    std::vector<FixedWord>& mine = report.results[h];
    for (size_t i = 0; i < d.packet.payload.size(); ++i) {
      mine[at + i] = s < H - 1 ? SaturatingAdd(mine[at + i], d.packet.payload[i])
                               : d.packet.payload[i];
    }
    recv_words[h] += d.packet.payload.size();
    if (recv_words[h] < chunk_begin(k + 1) - chunk_begin(k)) continue;
    recv_words[h] = 0;
    ++recv_step[h];
    if (recv_step[h] == steps) {
      done[h] = now;
    } else {
      send_step(h, recv_step[h], now);
    }
  }
  report.completion_s = *std::max_element(done.begin(), done.end());
  return report;
}

}  // namespace netreduce

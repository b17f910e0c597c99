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

#include <cstdint>
#include <vector>

#include "benchmark/benchmark.h"
#include "netreduce/accelerator.h"
#include "netreduce/cost_model.h"
#include "netreduce/fixed_point.h"
#include "netreduce/netsim.h"
#include "netreduce/protocol.h"

namespace netreduce {
namespace {

void BM_AccumulateInto(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  std::vector<FixedWord> acc(n, FixedWord{1}), in(n, FixedWord{3});
  for (auto _ : state) {
    AccumulateInto(acc, in);
    benchmark::DoNotOptimize(acc.data());
  }
  state.SetBytesProcessed(state.iterations() * n * kWordBytes);
}
BENCHMARK(BM_AccumulateInto)->Arg(256)->Arg(43520);

void BM_SegmentMessage(benchmark::State& state) {
  const std::vector<FixedWord> words(170 * 256, FixedWord{7});
  for (auto _ : state) {
    auto pkts = SegmentMessage(0, 1, words, 1024, 0);
    benchmark::DoNotOptimize(pkts);
  }
  state.SetItemsProcessed(state.iterations() * 170);
}
BENCHMARK(BM_SegmentMessage);

void BM_CrossoverTensorSize(benchmark::State& state) {
  CostParams p;
  p.gpus = 2048;
  p.gpus_per_machine = 8;
  p.alpha = 1e-6;
  p.bw_intra = 15.75e9;
  p.bw_inter = 12.5e9;
  for (auto _ : state) benchmark::DoNotOptimize(CrossoverTensorSize(p));
}
BENCHMARK(BM_CrossoverTensorSize);

// Accelerator throughput on one complete message per host, replayed with
// fresh message ids.
void BM_AcceleratorAggregate(benchmark::State& state) {
  const int hosts = static_cast<int>(state.range(0));
  constexpr int kLen = 170;
  AcceleratorOptions o;
  o.window = 2;
  o.max_msg_len = kLen;
  o.hosts_per_ring = hosts;
  Accelerator accel(o);
  const std::vector<FixedWord> words(kLen * 256, FixedWord{1});
  uint32_t msg = 0;
  int64_t packets = 0;
  for (auto _ : state) {
    for (int h = 0; h < hosts; ++h) {
      TransportHeaders t;
      t.src_ip = HostIp(h);
      t.dst_ip = HostIp((h + 1) % hosts);
      t.dst_qp = RecvQp((h + 1) % hosts, 0, 1);
      auto pkts = SegmentMessage(0, msg, words, 1024, msg * kLen, t);
      for (Packet& p : *pkts) {
        benchmark::DoNotOptimize(accel.Process(std::move(p)));
        ++packets;
      }
    }
    ++msg;
  }
  state.SetItemsProcessed(packets);
}
BENCHMARK(BM_AcceleratorAggregate)->Arg(4)->Arg(16);

void BM_SimulateSingleSwitch(benchmark::State& state) {
  SimConfig c;
  c.hosts = 4;
  c.tensor_bytes = static_cast<uint64_t>(state.range(0));
  c.loss_rate = state.range(1) / 1000.0;
  for (auto _ : state) {
    auto sim = Simulation::Create(c);
    benchmark::DoNotOptimize((*sim)->Run());
  }
  state.SetBytesProcessed(state.iterations() * c.tensor_bytes * c.hosts);
}
BENCHMARK(BM_SimulateSingleSwitch)
    ->Args({1 << 22, 0})
    ->Args({1 << 22, 10})
    ->Unit(benchmark::kMillisecond);

void BM_SimulateSpineLeaf(benchmark::State& state) {
  SimConfig c;
  c.topology = Topology::kSpineLeaf;
  c.hosts = 6;
  c.leaves = 3;
  c.tensor_bytes = 1 << 22;
  for (auto _ : state) {
    auto sim = Simulation::Create(c);
    benchmark::DoNotOptimize((*sim)->Run());
  }
}
BENCHMARK(BM_SimulateSpineLeaf)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace netreduce

BENCHMARK_MAIN();

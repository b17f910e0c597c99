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

#include "netreduce/cost_model.h"

#include <cmath>
#include <cstdint>

#include "gtest/gtest.h"
#include "support/gen.h"

namespace netreduce {
namespace {

using ::netreduce::testing::Gen;

constexpr double kRel = 1e-12;

void ExpectRelNear(double got, double want, double rel = kRel) {
  EXPECT_NEAR(got, want, rel * std::abs(want)) << "want " << want;
}

CostParams Hierarchy(int64_t P, int64_t n, double M) {
  CostParams p;
  p.gpus = P;
  p.gpus_per_machine = n;
  p.tensor_bytes = M;
  p.alpha = 1e-6;
  p.bw_intra = 15.75e9;
  p.bw_inter = 12.5e9;
  p.bandwidth = 12.5e9;
  return p;
}

// Step-by-step oracles, written from the algorithms rather than the closed
// forms under test.
double RingBySteps(int64_t P, double alpha, double M, double B) {
  double t = 0;
  for (int64_t step = 0; step < 2 * (P - 1); ++step) {
    t += alpha + (M / static_cast<double>(P)) / B;
  }
  return t;
}

double HierarchicalByPhases(const CostParams& p) {
  const double n = static_cast<double>(p.gpus_per_machine);
  const double M = p.tensor_bytes;
  // Intra-machine reduce-scatter over n GPUs.
  const double rs = (n - 1) * (p.alpha + (M / n) / p.bw_intra);
  // n concurrent rings, each moving M/n through the shared NIC.
  const double inter = p.alpha + n * (M / n) / p.bw_inter;
  // Intra-machine all-gather mirrors the reduce-scatter.
  return rs + inter + rs;
}

TEST(RingTimeTest, FrozenValue) {
  CostParams p;
  p.gpus = 4;
  p.alpha = 1e-6;
  p.tensor_bytes = 1e8;
  p.bandwidth = 1.25e10;
  ExpectRelNear(*RingTime(p), 0.012006);
  ExpectRelNear(*RingTime(p), RingBySteps(4, 1e-6, 1e8, 1.25e10));
}

TEST(NetReduceTimeTest, AlphaPlusSerialisation) {
  CostParams p;
  p.gpus = 8;
  p.alpha = 2e-6;
  p.tensor_bytes = 1e6;
  p.bandwidth = 1e9;
  ExpectRelNear(*NetReduceTime(p), 2e-6 + 1e-3);
}

TEST(DeltaSingleTest, EqualsDifferenceAndIsPositive) {
  Gen gen(31);
  for (int i = 0; i < 2000; ++i) {
    CostParams p;
    p.gpus = gen.Int(2, 100000);
    p.alpha = gen.LogUniform(1e-9, 1e-3);
    p.tensor_bytes = gen.LogUniform(1, 1e10);
    p.bandwidth = gen.LogUniform(1e8, 1e12);
    const double diff = *RingTime(p) - *NetReduceTime(p);
    const double delta = *DeltaSingle(p);
    ASSERT_NEAR(delta, diff, 1e-9 * *RingTime(p));
    ASSERT_GT(delta, 0.0);
  }
}

TEST(DeltaSingleTest, TwoGpusLeaveOnlyLatency) {
  CostParams p;
  p.gpus = 2;
  p.alpha = 1e-6;
  p.tensor_bytes = 1e9;
  p.bandwidth = 1e10;
  ExpectRelNear(*DeltaSingle(p), 1e-6);
}

TEST(HierarchyModelTest, FrozenValues) {
  struct Case {
    int64_t P, n;
    double M, flat, tencent, hier;
  };
  const Case cases[] = {
      {2048, 8, 250e6, 0.04407446875, 0.09592530555555556,
       0.04779277777777778},
      {64, 4, 1e8, 0.015876, 0.034086619047619046, 0.017530809523809525},
      {16, 2, 1e6, 0.00018, 0.000284984126984127, 0.0001464920634920635},
  };
  for (const Case& c : cases) {
    const CostParams p = Hierarchy(c.P, c.n, c.M);
    ExpectRelNear(*FlatRingTime(p), c.flat);
    ExpectRelNear(*TencentTime(p), c.tencent);
    ExpectRelNear(*HierarchicalNetReduceTime(p), c.hier);
  }
}

TEST(HierarchyModelTest, MatchesPhaseOracles) {
  Gen gen(32);
  for (int i = 0; i < 2000; ++i) {
    const int64_t n = int64_t{1} << gen.Int(0, 5);
    CostParams p = Hierarchy(n * gen.Int(2, 512), n, gen.LogUniform(1, 1e10));
    p.alpha = gen.LogUniform(1e-9, 1e-4);
    p.bw_intra = gen.LogUniform(1e9, 3e11);
    p.bw_inter = gen.LogUniform(1e9, 1e11);
    ExpectRelNear(*HierarchicalNetReduceTime(p), HierarchicalByPhases(p),
                  1e-11);
    ExpectRelNear(*FlatRingTime(p),
                  RingBySteps(p.gpus, p.alpha, p.tensor_bytes, p.bw_inter),
                  1e-11);
  }
}

TEST(HierarchyModelTest, DeltasAreDifferences) {
  Gen gen(33);
  for (int i = 0; i < 2000; ++i) {
    const int64_t n = int64_t{1} << gen.Int(0, 5);
    CostParams p = Hierarchy(n * gen.Int(2, 512), n, gen.LogUniform(1, 1e10));
    p.alpha = gen.LogUniform(1e-9, 1e-4);
    p.bw_intra = gen.LogUniform(1e9, 3e11);
    p.bw_inter = gen.LogUniform(1e9, 1e11);
    const double scale = *TencentTime(p) + *FlatRingTime(p);
    ASSERT_NEAR(*DeltaTrNh(p),
                *TencentTime(p) - *HierarchicalNetReduceTime(p),
                1e-11 * scale);
    ASSERT_NEAR(*DeltaFrNh(p),
                *FlatRingTime(p) - *HierarchicalNetReduceTime(p),
                1e-11 * scale);
  }
}

TEST(HierarchyModelTest, ReducesToSingleNetworkWhenOneGpuPerMachine) {
  Gen gen(34);
  for (int i = 0; i < 1000; ++i) {
    CostParams p = Hierarchy(gen.Int(2, 4096), 1, gen.LogUniform(1, 1e10));
    p.alpha = gen.LogUniform(1e-9, 1e-3);
    p.bandwidth = gen.LogUniform(1e8, 1e12);
    p.bw_intra = p.bw_inter = p.bandwidth;
    ExpectRelNear(*HierarchicalNetReduceTime(p), *NetReduceTime(p));
  }
}

TEST(HierarchyModelTest, HierarchicalTimeIndependentOfP) {
  const double base = *HierarchicalNetReduceTime(Hierarchy(16, 8, 250e6));
  for (int64_t P = 16; P <= 4096; P *= 2) {
    EXPECT_EQ(*HierarchicalNetReduceTime(Hierarchy(P, 8, 250e6)), base);
  }
}

TEST(HierarchyModelTest, TencentNeedsPowerOfTwo) {
  EXPECT_FALSE(TencentTime(Hierarchy(24, 6, 1e6)).ok());
  EXPECT_FALSE(DeltaTrNh(Hierarchy(24, 6, 1e6)).ok());
  EXPECT_TRUE(FlatRingTime(Hierarchy(24, 6, 1e6)).ok());
}

TEST(HierarchyModelTest, TencentBeatenWhenMachinesOutnumberThree) {
  for (int64_t n : {2, 4, 8, 16}) {
    for (int64_t P = 3 * n + n; P <= 4096; P += n) {
      for (double M : {1.0, 1e4, 1e6, 1e8, 1e10}) {
        CostParams p = Hierarchy(P, n, M);
        ASSERT_GT(*DeltaTrNh(p), 0.0) << "P=" << P << " n=" << n;
      }
    }
  }
}

TEST(ValidateCostParamsTest, RejectsBadParameters) {
  EXPECT_FALSE(ValidateCostParams(Hierarchy(1, 1, 1)).ok());
  EXPECT_FALSE(ValidateCostParams(Hierarchy(10, 4, 1)).ok());
  EXPECT_FALSE(ValidateCostParams(Hierarchy(8, 0, 1)).ok());
  EXPECT_FALSE(ValidateCostParams(Hierarchy(8, 2, -1)).ok());
  CostParams p = Hierarchy(8, 2, 1);
  p.bw_intra = 0;
  EXPECT_FALSE(ValidateCostParams(p).ok());
  p = Hierarchy(8, 2, 1);
  p.alpha = -1;
  EXPECT_FALSE(ValidateCostParams(p).ok());
  CostParams single;
  single.gpus = 4;
  single.bandwidth = 0;
  EXPECT_FALSE(RingTime(single).ok());
  EXPECT_FALSE(NetReduceTime(single).ok());
}

TEST(RatioConditionTest, Values) {
  ExpectRelNear(*RatioCondition(32, 8), 64.0 / 30.0);
  ExpectRelNear(*RatioCondition(2048, 8), 4096.0 / 2046.0);
  EXPECT_FALSE(RatioCondition(2, 2).ok());
  EXPECT_FALSE(RatioCondition(8, 1).ok());
  EXPECT_FALSE(RatioCondition(8, 8).ok());
}

TEST(RatioConditionTest, IsSufficientForHierarchicalWin) {
  Gen gen(35);
  for (int i = 0; i < 10000; ++i) {
    const int64_t n = gen.Int(2, 16);
    CostParams p = Hierarchy(n * gen.Int(2, 512), n, gen.LogUniform(1, 1e11));
    p.alpha = gen.LogUniform(1e-9, 1e-3);
    p.bw_inter = gen.LogUniform(1e9, 1e11);
    p.bw_intra = p.bw_inter * *RatioCondition(p.gpus, n) *
                 gen.Uniform(1.0, 10.0);
    ASSERT_GE(*DeltaFrNh(p), 0.0);
  }
}

TEST(CrossoverTest, FrozenValueNear130Megabytes) {
  const CostParams p = Hierarchy(2048, 8, 0);
  auto m = CrossoverTensorSize(p);
  ASSERT_TRUE(m.ok());
  ASSERT_TRUE(m->has_value());
  ExpectRelNear(**m, 130782298.91455609);
  auto c = DeltaFrNhCoefficients(p);
  ExpectRelNear(c->slope, -3.118923611111111e-11);
  // The two models agree at the crossover.
  CostParams at = p;
  at.tensor_bytes = **m;
  EXPECT_NEAR(*FlatRingTime(at), *HierarchicalNetReduceTime(at), 1e-15);
}

TEST(CrossoverTest, NoneWhenHierarchyAlwaysWins) {
  CostParams p = Hierarchy(2048, 8, 0);
  p.bw_intra = 150e9;
  auto m = CrossoverTensorSize(p);
  ASSERT_TRUE(m.ok());
  EXPECT_FALSE(m->has_value());
}

TEST(CrossoverTest, SignOfDeltaFlipsAtCrossover) {
  Gen gen(36);
  for (int i = 0; i < 1000; ++i) {
    const int64_t n = int64_t{1} << gen.Int(1, 4);
    CostParams p = Hierarchy(n * gen.Int(2, 512), n, 0);
    p.bw_intra = gen.LogUniform(1e9, 3e10);
    p.bw_inter = gen.LogUniform(1e9, 3e10);
    auto m = CrossoverTensorSize(p);
    ASSERT_TRUE(m.ok());
    if (!m->has_value()) continue;
    p.tensor_bytes = **m * 0.5;
    ASSERT_GT(*DeltaFrNh(p), 0.0);
    p.tensor_bytes = **m * 2.0;
    ASSERT_LT(*DeltaFrNh(p), 0.0);
  }
}

TEST(MinWindowTest, Examples) {
  // 5 us at 12.5 GB/s is 62500 bytes, under one 170 KiB message.
  EXPECT_EQ(*MinWindow({5e-6, 12.5e9, 170, 1024}), 1);
  EXPECT_NEAR(WindowQuotient({5e-6, 12.5e9, 170, 1024}), 62500.0 / 174080.0,
              1e-15);
  EXPECT_EQ(*MinWindow({100e-6, 12.5e9, 170, 1024}), 8);
  EXPECT_EQ(*MinWindow({2.0 * 174080 / 1e9, 1e9, 170, 1024}), 2);
  EXPECT_EQ(*MinWindow({0.0, 1e9, 170, 1024}), 1);
}

TEST(MinWindowTest, CoversBandwidthDelayProduct) {
  Gen gen(37);
  for (int i = 0; i < 10000; ++i) {
    const WindowParams w{gen.LogUniform(1e-7, 1e-2), gen.LogUniform(1e8, 1e11),
                         gen.Int(1, 1000), gen.Int(64, 9000)};
    const int64_t n = *MinWindow(w);
    const double bdp = w.rtt * w.port_rate;
    const double msg = static_cast<double>(w.msg_len * w.pkt_size);
    ASSERT_GE(n, 1);
    ASSERT_GE(n * msg, bdp * (1 - 1e-12));
    if (n > 1) ASSERT_LT((n - 1) * msg, bdp * (1 + 1e-12));
  }
}

TEST(MinWindowTest, RejectsBadParameters) {
  EXPECT_FALSE(MinWindow({-1.0, 1e9, 1, 1}).ok());
  EXPECT_FALSE(MinWindow({1.0, 0.0, 1, 1}).ok());
  EXPECT_FALSE(MinWindow({1.0, 1e9, 0, 1}).ok());
  EXPECT_FALSE(MinWindow({1.0, 1e9, 1, 0}).ok());
}

}  // namespace
}  // namespace netreduce

// Copyright 2026 The jfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jfuse/workloads.h"

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "jfuse/errors.h"
#include "jfuse/rewrite.h"
#include "test_graphs.h"

namespace jfuse {
namespace {

using testing::GraphBuilder;

bool HasDiamond(const HloGraph& g) {
  const GraphTopology& topo = g.topology();
  const size_t n = g.ops().size();
  // reach[u]: ops reachable from u, including u.
  std::vector<std::set<size_t>> reach(n);
  const std::vector<GroupId> order = topo_order(g);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const size_t u = *topo.OpIndex(*it);
    reach[u].insert(u);
    for (size_t e : topo.out_edges(u)) {
      const size_t v = *topo.OpIndex(g.edges()[e].dst);
      reach[u].insert(reach[v].begin(), reach[v].end());
    }
  }
  for (size_t u = 0; u < n; ++u) {
    const std::vector<size_t>& out = topo.out_edges(u);
    for (size_t a = 0; a < out.size(); ++a) {
      for (size_t b = a + 1; b < out.size(); ++b) {
        const size_t x = *topo.OpIndex(g.edges()[out[a]].dst);
        const size_t y = *topo.OpIndex(g.edges()[out[b]].dst);
        if (x == y) continue;
        for (size_t r : reach[x]) {
          if (reach[y].count(r) > 0) return true;
        }
      }
    }
  }
  return false;
}

TEST(GenWorkloadTest, SingleOp) {
  WorkloadSpec spec;
  spec.op_count = 1;
  spec.tensor_count = 0;
  const HloGraph g = gen_workload(spec);
  EXPECT_EQ(g.ops().size(), 1u);
  EXPECT_TRUE(g.edges().empty());
  EXPECT_TRUE(g.allreduces().empty());
  EXPECT_TRUE(validate_module(g).ok);
}

TEST(GenWorkloadTest, ResidualHasDiamond) {
  WorkloadSpec spec;
  spec.family = WorkloadFamily::kResidual;
  spec.op_count = 20;
  spec.tensor_count = 4;
  const HloGraph g = gen_workload(spec);
  EXPECT_EQ(g.ops().size(), 20u);
  EXPECT_TRUE(validate_module(g).ok);
  EXPECT_TRUE(HasDiamond(g));
}

TEST(GenWorkloadTest, DeterministicAndSeedSensitive) {
  for (WorkloadFamily f : {WorkloadFamily::kChain, WorkloadFamily::kResidual,
                           WorkloadFamily::kAttention, WorkloadFamily::kRecurrent}) {
    WorkloadSpec spec;
    spec.family = f;
    spec.op_count = 50;
    spec.tensor_count = 10;
    spec.seed = 3;
    const uint64_t h = canonical_hash(gen_workload(spec));
    EXPECT_EQ(canonical_hash(gen_workload(spec)), h);
    spec.seed = 4;
    EXPECT_NE(canonical_hash(gen_workload(spec)), h);
  }
}

TEST(GenWorkloadTest, StructureOnRandomSpecs) {
  for (uint64_t seed = 1; seed <= 300; ++seed) {
    const WorkloadSpec spec = testing::RandomSpec(seed, 1, 200, 30);
    const HloGraph g = gen_workload(spec);
    ASSERT_TRUE(validate_module(g).ok) << seed;
    ASSERT_EQ(static_cast<int64_t>(g.ops().size()), spec.op_count);
    ASSERT_EQ(static_cast<int64_t>(g.allreduces().size()), spec.tensor_count);
    for (const AllReduceInstr& ar : g.allreduces()) {
      ASSERT_GE(ar.tensor_bytes, spec.min_tensor_bytes);
      ASSERT_LE(ar.tensor_bytes, spec.max_tensor_bytes);
      // Every gradient tensor feeds a parameter update.
      ASSERT_EQ(ar.consumers.size(), 1u);
      const OpNode& update = g.ops()[*g.topology().OpIndex(ar.consumers[0])];
      ASSERT_EQ(update.op_code, "ApplyGradient");
      const OpNode& producer = g.ops()[*g.topology().OpIndex(ar.producer_op)];
      ASSERT_EQ(producer.kind, OpKind::kCompute);
    }
  }
}

TEST(GenWorkloadTest, RejectsBadSpecs) {
  WorkloadSpec spec;
  spec.op_count = 0;
  EXPECT_THROW(gen_workload(spec), Error);
  spec.op_count = 5;
  spec.tensor_count = 5;
  EXPECT_THROW(gen_workload(spec), Error);
  spec.tensor_count = 1;
  spec.min_tensor_bytes = 100;
  spec.max_tensor_bytes = 10;
  EXPECT_THROW(gen_workload(spec), Error);
}

TEST(OracleTest, SingletonFormula) {
  HardwareParams hw = HardwareParams::Default();
  hw.fixed_compute_us["Fixed"] = 100;
  hw.mem_us_per_byte = 1.0 / 1024;
  const HloGraph g = GraphBuilder()
                         .Op(1, "Parameter", OpKind::kParameter, 0)
                         .Op(2, "Fixed", OpKind::kCompute, 20480)
                         .Edge(1, 2, 10240)
                         .Build();
  EXPECT_DOUBLE_EQ(oracle_time(g, g.groups()[*g.GroupIndex(2)], hw), 135);
}

TEST(OracleTest, FusedChainExample) {
  HardwareParams hw = HardwareParams::Default();
  hw.fixed_compute_us["A"] = 100;
  hw.fixed_compute_us["B"] = 200;
  hw.mem_us_per_byte = 1.0 / 1024;
  const HloGraph g = GraphBuilder()
                         .Op(0, "Parameter", OpKind::kParameter, 0)
                         .Op(1, "A", OpKind::kCompute, 51200)
                         .Op(2, "B", OpKind::kCompute, 20480)
                         .Edge(0, 1, 10240)
                         .Edge(1, 2, 51200)
                         .Build();
  const double a = oracle_time(g, g.groups()[*g.GroupIndex(1)], hw);
  const double b = oracle_time(g, g.groups()[*g.GroupIndex(2)], hw);
  EXPECT_DOUBLE_EQ(a + b, 440);
  const HloGraph fused = fuse_nondup(g, 2, 1).graph;
  EXPECT_DOUBLE_EQ(oracle_time(fused, fused.groups()[*fused.GroupIndex(2)], hw), 335);
}

TEST(OracleTest, ReplicasCountComputeAgain) {
  HardwareParams hw = HardwareParams::Default();
  hw.fixed_compute_us["A"] = 100;
  hw.fixed_compute_us["B"] = 10;
  hw.launch_overhead_us = 0;
  hw.mem_us_per_byte = 0;
  const HloGraph g =
      GraphBuilder().Op(1, "A").Op(2, "B").Op(3, "B").Edge(1, 2).Edge(1, 3).Build();
  const HloGraph dup = fuse_dup(g, 2, 1).graph;
  double total = 0.0;
  for (const FusionGroup& grp : dup.groups()) total += oracle_time(dup, grp, hw);
  EXPECT_DOUBLE_EQ(total, 220);
}

TEST(OracleTest, NoiseIsDeterministicAndBounded) {
  HardwareParams hw = HardwareParams::Default();
  hw.noise = 0.05;
  hw.seed = 9;
  HardwareParams clean = hw;
  clean.noise = 0;
  WorkloadSpec spec;
  spec.family = WorkloadFamily::kAttention;
  spec.op_count = 60;
  const HloGraph g = gen_workload(spec);
  bool any_jitter = false;
  for (const FusionGroup& grp : g.groups()) {
    const double t = oracle_time(g, grp, hw);
    EXPECT_EQ(t, oracle_time(g, grp, hw));
    const double base = oracle_time(g, grp, clean);
    EXPECT_LE(std::abs(t / base - 1), 0.05 + 1e-12);
    any_jitter |= t != base;
  }
  EXPECT_TRUE(any_jitter);
}

TEST(OracleTest, RejectsGroupsOutsideState) {
  const HloGraph g = testing::Chain3();
  EXPECT_THROW(oracle_time(g, FusionGroup{1, {1, 2}, {}}, HardwareParams::Default()), Error);
}

TEST(OracleTest, NondupMergesAreSubadditive) {
  const HardwareParams hw = HardwareParams::Default();
  HardwareParams no_launch = hw;
  no_launch.launch_overhead_us = 0;
  int merges = 0;
  for (uint64_t seed = 1; merges < 1000; ++seed) {
    const HloGraph g = gen_workload(testing::RandomSpec(seed, 6, 80, 10));
    Rng rng(seed);
    HloGraph state = random_apply(g, OptimizationMethod::kNonDuplicateFusion,
                                  static_cast<int>(UniformInt(rng, 0, 4)), rng).graph;
    const auto pairs = FusionPairs(state);
    if (pairs.empty()) continue;
    const auto [op, pred] = pairs[UniformIndex(rng, pairs.size())];
    const RewriteOutcome o = fuse_nondup(state, op, pred);
    if (!o.applied) continue;
    ++merges;
    for (const HardwareParams& p : {hw, no_launch}) {
      const double parts = oracle_time(state, state.groups()[*state.GroupIndex(op)], p) +
                           oracle_time(state, state.groups()[*state.GroupIndex(pred)], p);
      const double merged = oracle_time(o.graph, o.graph.groups()[*o.graph.GroupIndex(op)], p);
      // Generated graphs always move bytes along fused edges, so savings are strict.
      ASSERT_LT(merged, parts) << seed;
    }
  }
}

TEST(OracleTest, EqualityWithoutTrafficOrLaunch) {
  HardwareParams hw = HardwareParams::Default();
  hw.launch_overhead_us = 0;
  const HloGraph g = GraphBuilder()
                         .Op(1, "Mul", OpKind::kCompute, 0)
                         .Op(2, "Mul", OpKind::kCompute, 4096)
                         .Edge(1, 2, 0)
                         .Build();
  const HloGraph fused = fuse_nondup(g, 2, 1).graph;
  EXPECT_DOUBLE_EQ(oracle_time(fused, fused.groups()[0], hw),
                   oracle_time(g, g.groups()[0], hw) + oracle_time(g, g.groups()[1], hw));
}

TEST(MakeProfileTest, ConsistentWithOracle) {
  const HardwareParams hw = HardwareParams::Default();
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const HloGraph g = gen_workload(testing::RandomSpec(seed, 1, 150, 20));
    const ProfileBundle pb = make_profile(g, hw);
    for (const FusionGroup& grp : g.groups()) {
      const OpNode& op = g.ops()[*g.topology().OpIndex(grp.member_ops[0])];
      EXPECT_EQ(lookup(pb.profile, op), oracle_time(g, grp, hw));
    }
  }
}

TEST(MakeProfileTest, CommSamplesRefit) {
  HardwareParams hw = HardwareParams::Default();
  hw.comm = CommModelParams{2.5e-4, 42};
  WorkloadSpec spec;
  spec.op_count = 40;
  spec.tensor_count = 12;
  const ProfileBundle pb = make_profile(gen_workload(spec), hw);
  const CommFit f = fit(pb.comm_samples);
  EXPECT_NEAR(f.params.C, 2.5e-4, 0.02 * 2.5e-4);
  EXPECT_NEAR(f.params.D, 42, 0.02 * 42);
}

TEST(TrainingSamplesTest, TwoOpChainHasOneChoice) {
  const HardwareParams hw = HardwareParams::Default();
  const HloGraph g = GraphBuilder().Op(1, "Mul").Op(2, "Add").Edge(1, 2).Build();
  const std::vector<TrainSample> s = gen_training_samples(g, 1, 1, 1, hw, 1);
  ASSERT_EQ(s.size(), 1u);
  ASSERT_EQ(s[0].features.nodes.size(), 2u);
  const HloGraph fused = fuse_nondup(g, 2, 1).graph;
  EXPECT_EQ(s[0].actual_us, oracle_time(fused, fused.groups()[0], hw));
}

TEST(TrainingSamplesTest, LargeRequestIsDeterministic) {
  HardwareParams hw = HardwareParams::Default();
  hw.noise = 0.05;
  WorkloadSpec spec;
  spec.family = WorkloadFamily::kResidual;
  spec.op_count = 200;
  spec.tensor_count = 20;
  const HloGraph g = gen_workload(spec);
  const std::vector<TrainSample> s = gen_training_samples(g, 30000, 1, 50, hw, 7);
  ASSERT_EQ(s.size(), 30000u);
  for (const TrainSample& t : s) {
    ASSERT_GT(t.actual_us, 0);
    ASSERT_GE(t.features.nodes.size(), 2u);
  }
  const std::vector<TrainSample> again = gen_training_samples(g, 200, 1, 50, hw, 7);
  EXPECT_EQ(FormatTrainSamples(again),
            FormatTrainSamples(std::vector<TrainSample>(s.begin(), s.begin() + 200)));
}

TEST(TrainingSamplesTest, RejectsBadRanges) {
  const HloGraph g = testing::Chain3();
  const HardwareParams hw = HardwareParams::Default();
  EXPECT_THROW(gen_training_samples(g, 0, 1, 1, hw, 1), Error);
  EXPECT_THROW(gen_training_samples(g, 1, 2, 1, hw, 1), Error);
  EXPECT_THROW(gen_training_samples(GraphBuilder().Op(1).Build(), 1, 1, 1, hw, 1), Error);
}

}  // namespace
}  // namespace jfuse

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

#ifndef JFUSE_WORKLOADS_H_
#define JFUSE_WORKLOADS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jfuse/comm_model.h"
#include "jfuse/estimator.h"
#include "jfuse/graph_ir.h"
#include "jfuse/simulator.h"

namespace jfuse {

// Synthetic device standing in for GPU profiling. A kernel costs its compute
// time plus one launch plus memory traffic for everything it reads from or
// writes to device memory.
struct HardwareParams {
  double launch_overhead_us = 5.0;
  double mem_us_per_byte = 1e-4;
  // Per op_code compute cost per 4-byte output element. A "Grad" suffix is
  // ignored when looking up a rate, so backward ops cost what their forward
  // counterparts cost.
  std::map<std::string, double> us_per_element;
  double default_us_per_element = 2e-4;
  // Per op_code compute time independent of size.
  std::map<std::string, double> fixed_compute_us;
  CommModelParams comm{1e-4, 30.0};
  // Relative label jitter: each value is scaled by 1 + noise * u with u in
  // [-1, 1), derived from the seed and the kernel's contents.
  double noise = 0.0;
  uint64_t seed = 0;

  static HardwareParams Default();
};

// Compute part of one op's kernel time (0 for parameter and control ops).
double OpComputeUs(const OpNode& op, const HardwareParams& hw);

// Ground-truth kernel time of a group of g. Duplicated members count once per
// group they appear in. Throws Error(kInvalidGraph) when the group is not part
// of g's fusion state.
double oracle_time(const HloGraph& g, const FusionGroup& group,
                   const HardwareParams& hw);

// Oracle kernel times and exact AllReduce model (C, D) from hw.
CostProviders MakeOracleProviders(const HardwareParams& hw);

enum class WorkloadFamily { kChain, kResidual, kAttention, kRecurrent };

std::string_view FamilyName(WorkloadFamily f);
std::optional<WorkloadFamily> ParseFamily(std::string_view name);

struct WorkloadSpec {
  WorkloadFamily family = WorkloadFamily::kChain;
  int64_t op_count = 20;
  int64_t tensor_count = 4;
  int64_t min_tensor_bytes = 4 << 10;
  int64_t max_tensor_bytes = 64 << 20;
  int64_t min_activation_bytes = 32 << 10;
  int64_t max_activation_bytes = 2 << 20;
  int64_t devices = 8;
  uint64_t seed = 1;
  std::string name;  // defaults to "<family>-<ops>-<seed>"
};

// Training-iteration graph: parameter ops, forward ops shaped after the
// family, a mirrored backward pass, one AllReduce per gradient tensor and one
// update op per tensor waiting on its AllReduce. op_count counts every op.
// Throws Error(kInvalidConfig) when the op budget cannot hold the tensors.
HloGraph gen_workload(const WorkloadSpec& spec);

struct ProfileBundle {
  Profile profile;
  std::vector<CommSample> comm_samples;
};

// Singleton oracle times in the unfused graph, plus AllReduce timings at the
// graph's tensor sizes and at a fixed ladder of probe sizes.
ProfileBundle make_profile(const HloGraph& g, const HardwareParams& hw);

// Random connected fused subgraphs grown from a random compute op by repeated
// predecessor fusion, labeled by the oracle. The number of fusion draws per
// sample is uniform in [min_fusions, max_fusions]; draws that would break
// convexity are skipped.
std::vector<TrainSample> gen_training_samples(const HloGraph& g, int64_t count,
                                              int64_t min_fusions,
                                              int64_t max_fusions,
                                              const HardwareParams& hw,
                                              uint64_t seed);

}  // namespace jfuse

#endif  // JFUSE_WORKLOADS_H_

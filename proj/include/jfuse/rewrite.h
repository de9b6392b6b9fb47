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

#ifndef JFUSE_REWRITE_H_
#define JFUSE_REWRITE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jfuse/graph_ir.h"
#include "jfuse/random.h"

namespace jfuse {

enum class OptimizationMethod {
  kNonDuplicateFusion,
  kDuplicateFusion,
  kAllReduceFusion,
};

inline constexpr OptimizationMethod kAllMethods[] = {
    OptimizationMethod::kNonDuplicateFusion,
    OptimizationMethod::kDuplicateFusion,
    OptimizationMethod::kAllReduceFusion,
};

std::string_view MethodName(OptimizationMethod m);  // "nondup", "dup", "ar"
std::optional<OptimizationMethod> ParseMethod(std::string_view name);

enum class RewriteStatus {
  kApplied,
  kUnknownTarget,
  kInvalidFusion,
  kNotNeighbors,
  kNoLegalChoice,
};

// When `applied` is false, `graph` is the input graph unchanged.
struct RewriteOutcome {
  HloGraph graph;
  bool applied = false;
  RewriteStatus status = RewriteStatus::kNoLegalChoice;
  std::string description;
};

// Merges `pred` into `op`. Consumers of pred's outputs outside the merged
// group (including its AllReduce tensors) now wait for the merged group.
RewriteOutcome fuse_nondup(const HloGraph& g, GroupId op, GroupId pred);

// Merges `pred` into `op` and keeps a replica of `pred` that publishes its
// outputs (and owns its gradient tensors) to every other consumer. Degrades to
// fuse_nondup when pred has no other consumer.
RewriteOutcome fuse_dup(const HloGraph& g, GroupId op, GroupId pred);

// Merges two neighboring buckets into one.
RewriteOutcome fuse_allreduce(const HloGraph& g, BucketId ar, BucketId neighbor);

// Buckets holding a tensor produced by a group adjacent to (or the same as)
// a producer group of `ar`; `ar` itself is excluded. Sorted by bucket id.
std::vector<BucketId> neighbors_allreduce(const HloGraph& g, BucketId ar);

// (op group, predecessor group) pairs eligible for op fusion: both groups hold
// only compute ops and pred feeds op directly.
std::vector<std::pair<GroupId, GroupId>> FusionPairs(const HloGraph& g);

// (bucket, neighbor bucket) ordered pairs eligible for AllReduce fusion.
std::vector<std::pair<BucketId, BucketId>> AllReducePairs(const HloGraph& g);

// Applies `method` up to n times, drawing the target pair uniformly among the
// currently eligible pairs. Draws whose rewrite is invalid are skipped.
RewriteOutcome random_apply(const HloGraph& g, OptimizationMethod method, int n,
                            Rng& rng);

}  // namespace jfuse

#endif  // JFUSE_REWRITE_H_

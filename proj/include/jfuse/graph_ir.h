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

#ifndef JFUSE_GRAPH_IR_H_
#define JFUSE_GRAPH_IR_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jfuse {

using OpId = int64_t;
using GroupId = int64_t;
using BucketId = int64_t;
using AllReduceId = int64_t;

enum class OpKind { kCompute, kParameter, kControl };

std::string_view OpKindName(OpKind kind);
std::optional<OpKind> ParseOpKind(std::string_view name);

struct OpNode {
  OpId id = 0;
  std::string op_code;
  OpKind kind = OpKind::kCompute;
  // Opaque profile key; only ever compared for equality.
  std::string input_shape_key;
  int64_t out_bytes = 0;
  std::optional<double> compute_us;
};

struct DataEdge {
  OpId src = 0;
  OpId dst = 0;
  int64_t bytes = 0;
};

// One gradient tensor synchronized across workers. `consumers` lists the ops
// that read the reduced result (parameter updates) and therefore wait for the
// bucket carrying this tensor.
struct AllReduceInstr {
  AllReduceId id = 0;
  OpId producer_op = 0;
  int64_t tensor_bytes = 0;
  std::vector<OpId> consumers;
};

// A fused compute kernel. Every op appears as a primary member of exactly one
// group; an op copied by duplicate fusion additionally appears in one other
// group, listed in that group's `duplicated_ops`.
struct FusionGroup {
  GroupId id = 0;
  std::vector<OpId> member_ops;      // sorted
  std::vector<OpId> duplicated_ops;  // sorted subset of member_ops

  bool Contains(OpId op) const;
  bool IsReplica(OpId op) const;
  size_t size() const { return member_ops.size(); }
};

struct TensorBucket {
  BucketId id = 0;
  std::vector<AllReduceId> members;  // sorted
  int64_t total_bytes = 0;
};

struct ModuleMeta {
  std::string name;
  int64_t devices = 1;
  uint64_t seed = 0;
};

// The immutable part of a training-iteration module: ops, data edges and the
// AllReduce instructions. Fusion state lives in HloGraph so that rewrites can
// share one topology.
class GraphTopology {
 public:
  GraphTopology() = default;
  GraphTopology(ModuleMeta meta, std::vector<OpNode> ops,
                std::vector<DataEdge> edges,
                std::vector<AllReduceInstr> allreduces);

  const ModuleMeta& meta() const { return meta_; }
  const std::vector<OpNode>& ops() const { return ops_; }
  const std::vector<DataEdge>& edges() const { return edges_; }
  const std::vector<AllReduceInstr>& allreduces() const { return allreduces_; }

  std::optional<size_t> OpIndex(OpId id) const;
  std::optional<size_t> AllReduceIndex(AllReduceId id) const;

  // Edge indices incident to an op (by op index). Edges whose endpoints are
  // unknown are left out and reported through defects().
  const std::vector<size_t>& in_edges(size_t op_index) const {
    return in_edges_[op_index];
  }
  const std::vector<size_t>& out_edges(size_t op_index) const {
    return out_edges_[op_index];
  }
  // AllReduce indices whose tensor this op produces.
  const std::vector<size_t>& produced_allreduces(size_t op_index) const {
    return produced_[op_index];
  }

  // Structural problems found while indexing (duplicate ids, dangling edge
  // endpoints, ...). validate_module reports these as violations.
  const std::vector<std::string>& defects() const { return defects_; }

  // Order-independent digest of ops, edges and AllReduce instructions.
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  ModuleMeta meta_;
  std::vector<OpNode> ops_;
  std::vector<DataEdge> edges_;
  std::vector<AllReduceInstr> allreduces_;
  std::unordered_map<OpId, size_t> op_index_;
  std::unordered_map<AllReduceId, size_t> ar_index_;
  std::vector<std::vector<size_t>> in_edges_;
  std::vector<std::vector<size_t>> out_edges_;
  std::vector<std::vector<size_t>> produced_;
  std::vector<std::string> defects_;
  uint64_t fingerprint_ = 0;
};

// Group/bucket level view of a fusion state. Nodes are indices into
// HloGraph::groups() and HloGraph::buckets().
struct Contraction {
  std::vector<int> primary_group;  // per op index
  std::vector<int> replica_group;  // per op index, -1 when not duplicated
  // Group whose completion publishes the op's output to other groups: the
  // replica when one exists, the primary group otherwise.
  std::vector<int> provider;
  std::vector<int> ar_bucket;  // per AllReduce index

  std::vector<std::vector<int>> succ;  // group -> groups, via data edges
  std::vector<std::vector<int>> pred;
  std::vector<std::vector<int>> group_out_buckets;  // buckets a group feeds
  std::vector<std::vector<int>> group_in_buckets;   // buckets a group awaits
  std::vector<std::vector<int>> bucket_producers;   // groups feeding a bucket
  std::vector<std::vector<int>> bucket_consumers;   // groups awaiting a bucket

  std::vector<OpId> min_op;         // smallest member op id per group
  std::vector<bool> all_compute;    // group holds only compute ops

  bool GroupContains(int group, size_t op_index) const {
    return primary_group[op_index] == group || replica_group[op_index] == group;
  }
  size_t num_groups() const { return succ.size(); }
  size_t num_buckets() const { return bucket_producers.size(); }
};

class HloGraph {
 public:
  HloGraph();
  HloGraph(std::shared_ptr<const GraphTopology> topology,
           std::vector<FusionGroup> groups, std::vector<TensorBucket> buckets);

  // Every op in its own group (group id = op id) and every AllReduce in its
  // own bucket (bucket id = AllReduce id).
  static HloGraph Unfused(std::shared_ptr<const GraphTopology> topology);

  const GraphTopology& topology() const { return *topology_; }
  const std::shared_ptr<const GraphTopology>& topology_ptr() const {
    return topology_;
  }
  const ModuleMeta& meta() const { return topology_->meta(); }
  const std::vector<OpNode>& ops() const { return topology_->ops(); }
  const std::vector<DataEdge>& edges() const { return topology_->edges(); }
  const std::vector<AllReduceInstr>& allreduces() const {
    return topology_->allreduces();
  }
  const std::vector<FusionGroup>& groups() const { return groups_; }
  const std::vector<TensorBucket>& buckets() const { return buckets_; }

  std::optional<size_t> GroupIndex(GroupId id) const;
  std::optional<size_t> BucketIndex(BucketId id) const;
  GroupId NextGroupId() const;

  // Lazily built and shared between copies. Throws Error(kInvalidGraph) when
  // the groups or buckets do not form partitions.
  const Contraction& contraction() const;

  HloGraph WithState(std::vector<FusionGroup> groups,
                     std::vector<TensorBucket> buckets) const;

 private:
  struct ContractionSlot {
    std::once_flag once;
    std::optional<Contraction> value;
    std::string error;
  };

  std::shared_ptr<const GraphTopology> topology_;
  std::vector<FusionGroup> groups_;
  std::vector<TensorBucket> buckets_;
  std::shared_ptr<ContractionSlot> slot_;
};

// Builds the contraction without throwing; partition problems are appended to
// `violations` and std::nullopt is returned.
std::optional<Contraction> BuildContraction(const HloGraph& g,
                                            std::vector<std::string>* violations);

// True when groups plus buckets, linked by data and AllReduce dependencies,
// form a DAG.
bool IsAcyclic(const Contraction& c);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

ValidationReport validate_module(const HloGraph& g);

// Group ids in dependency order; ties go to the group with the smallest member
// op id. Throws Error(kCycle).
std::vector<GroupId> topo_order(const HloGraph& g);

// Digest of topology plus fusion state. Group and bucket ids, and the order in
// which groups, buckets or members are listed, do not contribute.
uint64_t canonical_hash(const HloGraph& g);

struct ModuleStats {
  double total_compute_us = 0.0;
  double total_comm_us = 0.0;
  size_t op_count = 0;      // executed (possibly fused) compute kernels
  size_t bucket_count = 0;  // AllReduce launches
};

// Throws Error(kMissingCost) when a group or bucket has no duration.
ModuleStats module_stats(const HloGraph& g,
                         const std::map<GroupId, double>& group_costs,
                         const std::map<BucketId, double>& bucket_costs);

}  // namespace jfuse

#endif  // JFUSE_GRAPH_IR_H_

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

#include "jfuse/graph_ir.h"

#include <algorithm>
#include <deque>
#include <queue>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "jfuse/errors.h"
#include "jfuse/hashing.h"

namespace jfuse {

std::string_view OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kCompute: return "compute";
    case OpKind::kParameter: return "parameter";
    case OpKind::kControl: return "control";
  }
  return "compute";
}

std::optional<OpKind> ParseOpKind(std::string_view name) {
  if (name == "compute") return OpKind::kCompute;
  if (name == "parameter") return OpKind::kParameter;
  if (name == "control") return OpKind::kControl;
  return std::nullopt;
}

bool FusionGroup::Contains(OpId op) const {
  return std::binary_search(member_ops.begin(), member_ops.end(), op);
}

bool FusionGroup::IsReplica(OpId op) const {
  return std::binary_search(duplicated_ops.begin(), duplicated_ops.end(), op);
}

// ---------------------------------------------------------------------------
// GraphTopology

GraphTopology::GraphTopology(ModuleMeta meta, std::vector<OpNode> ops,
                             std::vector<DataEdge> edges,
                             std::vector<AllReduceInstr> allreduces)
    : meta_(std::move(meta)),
      ops_(std::move(ops)),
      edges_(std::move(edges)),
      allreduces_(std::move(allreduces)) {
  const size_t n = ops_.size();
  in_edges_.resize(n);
  out_edges_.resize(n);
  produced_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const OpNode& op = ops_[i];
    if (!op_index_.emplace(op.id, i).second) {
      defects_.push_back(fmt::format("duplicate op id {}", op.id));
    }
    if (op.out_bytes < 0) {
      defects_.push_back(fmt::format("op {} has negative out_bytes", op.id));
    }
    if (op.compute_us && !(*op.compute_us > 0.0)) {
      defects_.push_back(
          fmt::format("op {} has non-positive compute_us", op.id));
    }
  }
  for (size_t e = 0; e < edges_.size(); ++e) {
    const DataEdge& edge = edges_[e];
    auto s = OpIndex(edge.src);
    auto d = OpIndex(edge.dst);
    if (!s || !d) {
      defects_.push_back(fmt::format("edge {}->{} has an unknown endpoint",
                                     edge.src, edge.dst));
      continue;
    }
    if (edge.src == edge.dst) {
      defects_.push_back(fmt::format("self edge on op {}", edge.src));
      continue;
    }
    if (edge.bytes < 0) {
      defects_.push_back(
          fmt::format("edge {}->{} has negative bytes", edge.src, edge.dst));
    }
    out_edges_[*s].push_back(e);
    in_edges_[*d].push_back(e);
  }
  for (size_t a = 0; a < allreduces_.size(); ++a) {
    AllReduceInstr& ar = allreduces_[a];
    std::sort(ar.consumers.begin(), ar.consumers.end());
    if (!ar_index_.emplace(ar.id, a).second) {
      defects_.push_back(fmt::format("duplicate allreduce id {}", ar.id));
    }
    if (ar.tensor_bytes <= 0) {
      defects_.push_back(
          fmt::format("allreduce {} has non-positive tensor_bytes", ar.id));
    }
    auto p = OpIndex(ar.producer_op);
    if (!p) {
      defects_.push_back(fmt::format("allreduce {} producer {} does not exist",
                                     ar.id, ar.producer_op));
    } else {
      if (ops_[*p].kind != OpKind::kCompute) {
        defects_.push_back(fmt::format(
            "allreduce {} producer {} is not a compute op", ar.id,
            ar.producer_op));
      }
      produced_[*p].push_back(a);
    }
    for (OpId c : ar.consumers) {
      if (!OpIndex(c)) {
        defects_.push_back(fmt::format(
            "allreduce {} consumer {} does not exist", ar.id, c));
      }
    }
  }

  // Order-independent fingerprint: hash each element, sort, fold.
  std::vector<uint64_t> parts;
  parts.reserve(ops_.size() + edges_.size() + allreduces_.size());
  for (const OpNode& op : ops_) {
    uint64_t h = HashCombine(1, static_cast<uint64_t>(op.id));
    h = HashCombine(h, HashString(op.op_code));
    h = HashCombine(h, static_cast<uint64_t>(op.kind));
    h = HashCombine(h, HashString(op.input_shape_key));
    h = HashCombine(h, static_cast<uint64_t>(op.out_bytes));
    parts.push_back(h);
  }
  for (const DataEdge& e : edges_) {
    uint64_t h = HashCombine(2, static_cast<uint64_t>(e.src));
    h = HashCombine(h, static_cast<uint64_t>(e.dst));
    parts.push_back(HashCombine(h, static_cast<uint64_t>(e.bytes)));
  }
  for (const AllReduceInstr& ar : allreduces_) {
    uint64_t h = HashCombine(3, static_cast<uint64_t>(ar.id));
    h = HashCombine(h, static_cast<uint64_t>(ar.producer_op));
    h = HashCombine(h, static_cast<uint64_t>(ar.tensor_bytes));
    for (OpId c : ar.consumers) h = HashCombine(h, static_cast<uint64_t>(c));
    parts.push_back(h);
  }
  std::sort(parts.begin(), parts.end());
  uint64_t fp = 0x6a66757365ULL;
  for (uint64_t p : parts) fp = HashCombine(fp, p);
  fingerprint_ = fp;
}

std::optional<size_t> GraphTopology::OpIndex(OpId id) const {
  auto it = op_index_.find(id);
  if (it == op_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> GraphTopology::AllReduceIndex(AllReduceId id) const {
  auto it = ar_index_.find(id);
  if (it == ar_index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// HloGraph

namespace {

void NormalizeGroups(std::vector<FusionGroup>& groups) {
  for (FusionGroup& g : groups) {
    std::sort(g.member_ops.begin(), g.member_ops.end());
    std::sort(g.duplicated_ops.begin(), g.duplicated_ops.end());
  }
}

void NormalizeBuckets(std::vector<TensorBucket>& buckets) {
  for (TensorBucket& b : buckets) std::sort(b.members.begin(), b.members.end());
}

}  // namespace

HloGraph::HloGraph()
    : topology_(std::make_shared<const GraphTopology>()),
      slot_(std::make_shared<ContractionSlot>()) {}

HloGraph::HloGraph(std::shared_ptr<const GraphTopology> topology,
                   std::vector<FusionGroup> groups,
                   std::vector<TensorBucket> buckets)
    : topology_(std::move(topology)),
      groups_(std::move(groups)),
      buckets_(std::move(buckets)),
      slot_(std::make_shared<ContractionSlot>()) {
  NormalizeGroups(groups_);
  NormalizeBuckets(buckets_);
}

HloGraph HloGraph::Unfused(std::shared_ptr<const GraphTopology> topology) {
  std::vector<FusionGroup> groups;
  groups.reserve(topology->ops().size());
  for (const OpNode& op : topology->ops()) {
    groups.push_back(FusionGroup{op.id, {op.id}, {}});
  }
  std::vector<TensorBucket> buckets;
  buckets.reserve(topology->allreduces().size());
  for (const AllReduceInstr& ar : topology->allreduces()) {
    buckets.push_back(TensorBucket{ar.id, {ar.id}, ar.tensor_bytes});
  }
  return HloGraph(std::move(topology), std::move(groups), std::move(buckets));
}

std::optional<size_t> HloGraph::GroupIndex(GroupId id) const {
  for (size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<size_t> HloGraph::BucketIndex(BucketId id) const {
  for (size_t i = 0; i < buckets_.size(); ++i) {
    if (buckets_[i].id == id) return i;
  }
  return std::nullopt;
}

GroupId HloGraph::NextGroupId() const {
  GroupId next = 0;
  for (const FusionGroup& g : groups_) next = std::max(next, g.id + 1);
  return next;
}

const Contraction& HloGraph::contraction() const {
  std::call_once(slot_->once, [this] {
    std::vector<std::string> violations;
    slot_->value = BuildContraction(*this, &violations);
    if (!slot_->value) {
      slot_->error = violations.empty() ? "malformed fusion state"
                                        : violations.front();
    }
  });
  if (!slot_->value) throw Error(ErrorCode::kInvalidGraph, slot_->error);
  return *slot_->value;
}

HloGraph HloGraph::WithState(std::vector<FusionGroup> groups,
                             std::vector<TensorBucket> buckets) const {
  return HloGraph(topology_, std::move(groups), std::move(buckets));
}

// ---------------------------------------------------------------------------
// Contraction

namespace {

void SortUnique(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::optional<Contraction> BuildContraction(
    const HloGraph& g, std::vector<std::string>* violations) {
  const GraphTopology& topo = g.topology();
  const size_t n_ops = topo.ops().size();
  const size_t n_groups = g.groups().size();
  const size_t n_buckets = g.buckets().size();
  bool ok = true;
  auto fail = [&](std::string msg) {
    ok = false;
    if (violations) violations->push_back(std::move(msg));
  };

  Contraction c;
  c.primary_group.assign(n_ops, -1);
  c.replica_group.assign(n_ops, -1);
  c.min_op.assign(n_groups, 0);
  c.all_compute.assign(n_groups, true);
  for (size_t gi = 0; gi < n_groups; ++gi) {
    const FusionGroup& group = g.groups()[gi];
    if (group.member_ops.empty()) {
      fail(fmt::format("group {} is empty", group.id));
      continue;
    }
    c.min_op[gi] = group.member_ops.front();
    for (OpId op : group.member_ops) {
      auto idx = topo.OpIndex(op);
      if (!idx) {
        fail(fmt::format("group {} references unknown op {}", group.id, op));
        continue;
      }
      if (topo.ops()[*idx].kind != OpKind::kCompute) c.all_compute[gi] = false;
      if (group.IsReplica(op)) {
        if (c.replica_group[*idx] != -1) {
          fail(fmt::format("op {} is replicated more than once", op));
        }
        c.replica_group[*idx] = static_cast<int>(gi);
      } else {
        if (c.primary_group[*idx] != -1) {
          fail(fmt::format("op {} belongs to more than one group", op));
        }
        c.primary_group[*idx] = static_cast<int>(gi);
      }
    }
    for (OpId op : group.duplicated_ops) {
      if (!group.Contains(op)) {
        fail(fmt::format("group {} marks non-member op {} as duplicated",
                         group.id, op));
      }
    }
  }
  for (size_t i = 0; i < n_ops; ++i) {
    if (c.primary_group[i] == -1) {
      fail(fmt::format("op {} is not in any group", topo.ops()[i].id));
    } else if (c.replica_group[i] == c.primary_group[i]) {
      fail(fmt::format("op {} is both member and replica of one group",
                       topo.ops()[i].id));
    }
  }

  c.ar_bucket.assign(topo.allreduces().size(), -1);
  for (size_t bi = 0; bi < n_buckets; ++bi) {
    const TensorBucket& bucket = g.buckets()[bi];
    if (bucket.members.empty()) {
      fail(fmt::format("bucket {} is empty", bucket.id));
    }
    for (AllReduceId ar : bucket.members) {
      auto idx = topo.AllReduceIndex(ar);
      if (!idx) {
        fail(fmt::format("bucket {} references unknown allreduce {}",
                         bucket.id, ar));
        continue;
      }
      if (c.ar_bucket[*idx] != -1) {
        fail(fmt::format("allreduce {} belongs to more than one bucket", ar));
      }
      c.ar_bucket[*idx] = static_cast<int>(bi);
    }
  }
  for (size_t a = 0; a < c.ar_bucket.size(); ++a) {
    if (c.ar_bucket[a] == -1) {
      fail(fmt::format("allreduce {} is not in any bucket",
                       topo.allreduces()[a].id));
    }
    if (!topo.OpIndex(topo.allreduces()[a].producer_op)) ok = false;
  }
  if (!ok) return std::nullopt;

  c.provider.resize(n_ops);
  for (size_t i = 0; i < n_ops; ++i) {
    c.provider[i] =
        c.replica_group[i] != -1 ? c.replica_group[i] : c.primary_group[i];
  }

  c.succ.assign(n_groups, {});
  c.pred.assign(n_groups, {});
  c.group_out_buckets.assign(n_groups, {});
  c.group_in_buckets.assign(n_groups, {});
  c.bucket_producers.assign(n_buckets, {});
  c.bucket_consumers.assign(n_buckets, {});

  for (size_t gi = 0; gi < n_groups; ++gi) {
    const int group = static_cast<int>(gi);
    for (OpId op : g.groups()[gi].member_ops) {
      const size_t v = *topo.OpIndex(op);
      for (size_t e : topo.in_edges(v)) {
        const size_t u = *topo.OpIndex(topo.edges()[e].src);
        if (c.GroupContains(group, u)) continue;
        const int from = c.provider[u];
        c.succ[from].push_back(group);
        c.pred[gi].push_back(from);
      }
    }
  }
  for (size_t a = 0; a < topo.allreduces().size(); ++a) {
    const AllReduceInstr& ar = topo.allreduces()[a];
    const int bucket = c.ar_bucket[a];
    const int from = c.provider[*topo.OpIndex(ar.producer_op)];
    c.bucket_producers[bucket].push_back(from);
    c.group_out_buckets[from].push_back(bucket);
    for (OpId consumer : ar.consumers) {
      auto idx = topo.OpIndex(consumer);
      if (!idx) continue;
      for (int holder : {c.primary_group[*idx], c.replica_group[*idx]}) {
        if (holder < 0) continue;
        c.bucket_consumers[bucket].push_back(holder);
        c.group_in_buckets[holder].push_back(bucket);
      }
    }
  }
  for (auto& v : c.succ) SortUnique(v);
  for (auto& v : c.pred) SortUnique(v);
  for (auto& v : c.group_out_buckets) SortUnique(v);
  for (auto& v : c.group_in_buckets) SortUnique(v);
  for (auto& v : c.bucket_producers) SortUnique(v);
  for (auto& v : c.bucket_consumers) SortUnique(v);
  return c;
}

bool IsAcyclic(const Contraction& c) {
  const size_t ng = c.num_groups();
  const size_t nb = c.num_buckets();
  std::vector<int> indeg(ng + nb, 0);
  for (size_t gi = 0; gi < ng; ++gi) {
    indeg[gi] = static_cast<int>(c.pred[gi].size() + c.group_in_buckets[gi].size());
  }
  for (size_t bi = 0; bi < nb; ++bi) {
    indeg[ng + bi] = static_cast<int>(c.bucket_producers[bi].size());
  }
  std::vector<size_t> stack;
  for (size_t i = 0; i < indeg.size(); ++i) {
    if (indeg[i] == 0) stack.push_back(i);
  }
  size_t seen = 0;
  while (!stack.empty()) {
    const size_t node = stack.back();
    stack.pop_back();
    ++seen;
    auto release = [&](size_t next) {
      if (--indeg[next] == 0) stack.push_back(next);
    };
    if (node < ng) {
      for (int s : c.succ[node]) release(static_cast<size_t>(s));
      for (int b : c.group_out_buckets[node]) release(ng + b);
    } else {
      for (int s : c.bucket_consumers[node - ng]) release(static_cast<size_t>(s));
    }
  }
  return seen == indeg.size();
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool TopologyIsAcyclic(const GraphTopology& topo) {
  const size_t n = topo.ops().size();
  std::vector<int> indeg(n, 0);
  for (size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(topo.in_edges(i).size());
  std::vector<size_t> stack;
  for (size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) stack.push_back(i);
  }
  size_t seen = 0;
  while (!stack.empty()) {
    const size_t u = stack.back();
    stack.pop_back();
    ++seen;
    for (size_t e : topo.out_edges(u)) {
      const size_t v = *topo.OpIndex(topo.edges()[e].dst);
      if (--indeg[v] == 0) stack.push_back(v);
    }
  }
  return seen == n;
}

bool GroupIsConnected(const GraphTopology& topo, const FusionGroup& group) {
  if (group.member_ops.size() <= 1) return true;
  std::set<size_t> members;
  for (OpId op : group.member_ops) members.insert(*topo.OpIndex(op));
  std::set<size_t> reached{*members.begin()};
  std::vector<size_t> stack{*members.begin()};
  while (!stack.empty()) {
    const size_t u = stack.back();
    stack.pop_back();
    auto visit = [&](size_t v) {
      if (members.count(v) && reached.insert(v).second) stack.push_back(v);
    };
    for (size_t e : topo.out_edges(u)) visit(*topo.OpIndex(topo.edges()[e].dst));
    for (size_t e : topo.in_edges(u)) visit(*topo.OpIndex(topo.edges()[e].src));
  }
  return reached.size() == members.size();
}

}  // namespace

ValidationReport validate_module(const HloGraph& g) {
  ValidationReport report;
  const GraphTopology& topo = g.topology();
  for (const std::string& d : topo.defects()) report.violations.push_back(d);
  if (report.violations.empty() && !TopologyIsAcyclic(topo)) {
    report.violations.push_back("data edges contain a cycle");
  }

  std::set<GroupId> group_ids;
  for (const FusionGroup& group : g.groups()) {
    if (!group_ids.insert(group.id).second) {
      report.violations.push_back(fmt::format("duplicate group id {}", group.id));
    }
    bool members_known = true;
    for (OpId op : group.member_ops) {
      auto idx = topo.OpIndex(op);
      if (!idx) {
        members_known = false;
        continue;
      }
      if (group.size() > 1 && topo.ops()[*idx].kind != OpKind::kCompute) {
        report.violations.push_back(fmt::format(
            "group {} fuses {} op {}", group.id,
            OpKindName(topo.ops()[*idx].kind), op));
      }
      if (group.IsReplica(op) && topo.ops()[*idx].kind != OpKind::kCompute) {
        report.violations.push_back(
            fmt::format("group {} replicates non-compute op {}", group.id, op));
      }
    }
    if (members_known && !GroupIsConnected(topo, group)) {
      report.violations.push_back(
          fmt::format("group {} is not connected", group.id));
    }
  }

  std::set<BucketId> bucket_ids;
  for (const TensorBucket& bucket : g.buckets()) {
    if (!bucket_ids.insert(bucket.id).second) {
      report.violations.push_back(
          fmt::format("duplicate bucket id {}", bucket.id));
    }
    int64_t sum = 0;
    bool known = true;
    for (AllReduceId ar : bucket.members) {
      auto idx = topo.AllReduceIndex(ar);
      if (!idx) {
        known = false;
        continue;
      }
      sum += topo.allreduces()[*idx].tensor_bytes;
    }
    if (known && sum != bucket.total_bytes) {
      report.violations.push_back(fmt::format(
          "bucket {} total_bytes {} != member sum {}", bucket.id,
          bucket.total_bytes, sum));
    }
  }

  if (report.violations.empty()) {
    std::vector<std::string> partition;
    auto c = BuildContraction(g, &partition);
    for (std::string& v : partition) report.violations.push_back(std::move(v));
    if (c && !IsAcyclic(*c)) {
      report.violations.push_back("contracted graph contains a cycle");
    }
  }
  report.ok = report.violations.empty();
  return report;
}

std::vector<GroupId> topo_order(const HloGraph& g) {
  const Contraction& c = g.contraction();
  const size_t ng = c.num_groups();
  const size_t nb = c.num_buckets();
  std::vector<int> indeg(ng + nb, 0);
  for (size_t gi = 0; gi < ng; ++gi) {
    indeg[gi] = static_cast<int>(c.pred[gi].size() + c.group_in_buckets[gi].size());
  }
  for (size_t bi = 0; bi < nb; ++bi) {
    indeg[ng + bi] = static_cast<int>(c.bucket_producers[bi].size());
  }
  using Key = std::tuple<OpId, GroupId, size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> ready;
  std::vector<size_t> ready_buckets;
  auto push = [&](size_t node) {
    if (node < ng) {
      ready.emplace(c.min_op[node], g.groups()[node].id, node);
    } else {
      ready_buckets.push_back(node - ng);
    }
  };
  for (size_t i = 0; i < indeg.size(); ++i) {
    if (indeg[i] == 0) push(i);
  }
  std::vector<GroupId> order;
  order.reserve(ng);
  size_t buckets_done = 0;
  while (!ready.empty() || !ready_buckets.empty()) {
    // Buckets carry no position in the order; drain them eagerly.
    if (!ready_buckets.empty()) {
      const size_t b = ready_buckets.back();
      ready_buckets.pop_back();
      ++buckets_done;
      for (int s : c.bucket_consumers[b]) {
        if (--indeg[s] == 0) push(static_cast<size_t>(s));
      }
      continue;
    }
    const size_t node = std::get<2>(ready.top());
    ready.pop();
    order.push_back(g.groups()[node].id);
    for (int s : c.succ[node]) {
      if (--indeg[s] == 0) push(static_cast<size_t>(s));
    }
    for (int b : c.group_out_buckets[node]) {
      if (--indeg[ng + b] == 0) push(ng + b);
    }
  }
  if (order.size() != ng || buckets_done != nb) {
    throw Error(ErrorCode::kCycle, "contracted graph contains a cycle");
  }
  return order;
}

uint64_t canonical_hash(const HloGraph& g) {
  std::vector<uint64_t> group_hashes;
  group_hashes.reserve(g.groups().size());
  for (const FusionGroup& group : g.groups()) {
    uint64_t h = 0x67726f7570ULL;
    for (OpId op : group.member_ops) {
      h = HashCombine(h, static_cast<uint64_t>(op) * 2 + (group.IsReplica(op) ? 1 : 0));
    }
    group_hashes.push_back(h);
  }
  std::sort(group_hashes.begin(), group_hashes.end());
  std::vector<uint64_t> bucket_hashes;
  bucket_hashes.reserve(g.buckets().size());
  for (const TensorBucket& bucket : g.buckets()) {
    uint64_t h = 0x6275636b6574ULL;
    for (AllReduceId ar : bucket.members) h = HashCombine(h, static_cast<uint64_t>(ar));
    bucket_hashes.push_back(h);
  }
  std::sort(bucket_hashes.begin(), bucket_hashes.end());
  uint64_t digest = g.topology().fingerprint();
  for (uint64_t h : group_hashes) digest = HashCombine(digest, h);
  digest = HashCombine(digest, 0xb0c7e75ULL);
  for (uint64_t h : bucket_hashes) digest = HashCombine(digest, h);
  return digest;
}

ModuleStats module_stats(const HloGraph& g,
                         const std::map<GroupId, double>& group_costs,
                         const std::map<BucketId, double>& bucket_costs) {
  ModuleStats stats;
  for (const FusionGroup& group : g.groups()) {
    auto it = group_costs.find(group.id);
    if (it == group_costs.end()) {
      throw Error(ErrorCode::kMissingCost,
                  fmt::format("no duration for group {}", group.id));
    }
    stats.total_compute_us += it->second;
  }
  for (const TensorBucket& bucket : g.buckets()) {
    auto it = bucket_costs.find(bucket.id);
    if (it == bucket_costs.end()) {
      throw Error(ErrorCode::kMissingCost,
                  fmt::format("no duration for bucket {}", bucket.id));
    }
    stats.total_comm_us += it->second;
  }
  stats.op_count = g.groups().size();
  stats.bucket_count = g.buckets().size();
  return stats;
}

}  // namespace jfuse

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

#include "jfuse/rewrite.h"

#include <algorithm>
#include <iterator>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "jfuse/errors.h"

namespace jfuse {

std::string_view MethodName(OptimizationMethod m) {
  switch (m) {
    case OptimizationMethod::kNonDuplicateFusion: return "nondup";
    case OptimizationMethod::kDuplicateFusion: return "dup";
    case OptimizationMethod::kAllReduceFusion: return "ar";
  }
  return "nondup";
}

std::optional<OptimizationMethod> ParseMethod(std::string_view name) {
  if (name == "nondup") return OptimizationMethod::kNonDuplicateFusion;
  if (name == "dup") return OptimizationMethod::kDuplicateFusion;
  if (name == "ar") return OptimizationMethod::kAllReduceFusion;
  return std::nullopt;
}

namespace {

RewriteOutcome Rejected(const HloGraph& g, RewriteStatus status,
                        std::string description) {
  return RewriteOutcome{g, false, status, std::move(description)};
}

bool Contains(const std::vector<int>& sorted, int x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

std::vector<OpId> SortedUnion(const std::vector<OpId>& a,
                              const std::vector<OpId>& b) {
  std::vector<OpId> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool Intersects(const std::vector<OpId>& a, const std::vector<OpId>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

struct PairCheck {
  size_t op_index = 0;
  size_t pred_index = 0;
  std::optional<RewriteOutcome> rejection;
};

PairCheck CheckFusionPair(const HloGraph& g, GroupId op, GroupId pred) {
  PairCheck check;
  auto oi = g.GroupIndex(op);
  auto pi = g.GroupIndex(pred);
  if (!oi || !pi) {
    check.rejection = Rejected(g, RewriteStatus::kUnknownTarget,
                               fmt::format("unknown group {} or {}", op, pred));
    return check;
  }
  check.op_index = *oi;
  check.pred_index = *pi;
  const Contraction& c = g.contraction();
  if (op == pred) {
    check.rejection = Rejected(g, RewriteStatus::kInvalidFusion,
                               fmt::format("group {} fused with itself", op));
  } else if (!c.all_compute[*oi] || !c.all_compute[*pi]) {
    check.rejection = Rejected(
        g, RewriteStatus::kInvalidFusion,
        fmt::format("group {} or {} holds a non-fusible op", op, pred));
  } else if (!Contains(c.pred[*oi], static_cast<int>(*pi))) {
    check.rejection = Rejected(
        g, RewriteStatus::kInvalidFusion,
        fmt::format("group {} is not a direct predecessor of {}", pred, op));
  } else if (Intersects(g.groups()[*oi].member_ops, g.groups()[*pi].member_ops)) {
    check.rejection = Rejected(
        g, RewriteStatus::kInvalidFusion,
        fmt::format("groups {} and {} share an op", op, pred));
  }
  return check;
}

// Returns the rewritten graph if its contraction is still acyclic.
RewriteOutcome Finish(const HloGraph& input, HloGraph candidate,
                      std::string description) {
  bool acyclic = false;
  try {
    acyclic = IsAcyclic(candidate.contraction());
  } catch (const Error&) {
    acyclic = false;
  }
  if (!acyclic) {
    return Rejected(input, RewriteStatus::kInvalidFusion,
                    description + ": contraction cycle");
  }
  return RewriteOutcome{std::move(candidate), true, RewriteStatus::kApplied,
                        std::move(description)};
}

}  // namespace

RewriteOutcome fuse_nondup(const HloGraph& g, GroupId op, GroupId pred) {
  PairCheck check = CheckFusionPair(g, op, pred);
  if (check.rejection) return std::move(*check.rejection);
  const FusionGroup& o = g.groups()[check.op_index];
  const FusionGroup& p = g.groups()[check.pred_index];

  FusionGroup merged{o.id, SortedUnion(o.member_ops, p.member_ops),
                     SortedUnion(o.duplicated_ops, p.duplicated_ops)};
  std::vector<FusionGroup> groups;
  groups.reserve(g.groups().size() - 1);
  for (size_t i = 0; i < g.groups().size(); ++i) {
    if (i == check.pred_index) continue;
    groups.push_back(i == check.op_index ? merged : g.groups()[i]);
  }
  return Finish(g, g.WithState(std::move(groups), g.buckets()),
                fmt::format("nondup({}<-{})", op, pred));
}

RewriteOutcome fuse_dup(const HloGraph& g, GroupId op, GroupId pred) {
  PairCheck check = CheckFusionPair(g, op, pred);
  if (check.rejection) return std::move(*check.rejection);
  const Contraction& c = g.contraction();
  const int pi = static_cast<int>(check.pred_index);
  const int oi = static_cast<int>(check.op_index);

  bool other_consumers = !c.group_out_buckets[pi].empty();
  for (int s : c.succ[pi]) other_consumers |= (s != oi);
  if (!other_consumers) {
    RewriteOutcome out = fuse_nondup(g, op, pred);
    out.description = fmt::format("dup({}<-{}) as {}", op, pred, out.description);
    return out;
  }

  const FusionGroup& o = g.groups()[check.op_index];
  const FusionGroup& p = g.groups()[check.pred_index];
  if (!p.duplicated_ops.empty()) {
    return Rejected(g, RewriteStatus::kInvalidFusion,
                    fmt::format("group {} already holds replicas", pred));
  }
  for (OpId member : p.member_ops) {
    if (c.replica_group[*g.topology().OpIndex(member)] != -1) {
      return Rejected(g, RewriteStatus::kInvalidFusion,
                      fmt::format("op {} is already replicated", member));
    }
  }

  FusionGroup merged{o.id, SortedUnion(o.member_ops, p.member_ops),
                     o.duplicated_ops};
  FusionGroup replica{g.NextGroupId(), p.member_ops, p.member_ops};
  std::vector<FusionGroup> groups;
  groups.reserve(g.groups().size());
  for (size_t i = 0; i < g.groups().size(); ++i) {
    if (i == check.pred_index) continue;
    groups.push_back(i == check.op_index ? merged : g.groups()[i]);
  }
  groups.push_back(std::move(replica));
  return Finish(g, g.WithState(std::move(groups), g.buckets()),
                fmt::format("dup({}<-{})", op, pred));
}

std::vector<BucketId> neighbors_allreduce(const HloGraph& g, BucketId ar) {
  auto bi = g.BucketIndex(ar);
  if (!bi) return {};
  const Contraction& c = g.contraction();
  std::vector<int> near;
  for (int producer : c.bucket_producers[*bi]) {
    near.push_back(producer);
    near.insert(near.end(), c.succ[producer].begin(), c.succ[producer].end());
    near.insert(near.end(), c.pred[producer].begin(), c.pred[producer].end());
  }
  std::sort(near.begin(), near.end());
  near.erase(std::unique(near.begin(), near.end()), near.end());
  std::vector<BucketId> out;
  for (int group : near) {
    for (int b : c.group_out_buckets[group]) {
      if (static_cast<size_t>(b) != *bi) out.push_back(g.buckets()[b].id);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RewriteOutcome fuse_allreduce(const HloGraph& g, BucketId ar, BucketId neighbor) {
  auto ai = g.BucketIndex(ar);
  auto ni = g.BucketIndex(neighbor);
  if (!ai || !ni) {
    return Rejected(g, RewriteStatus::kUnknownTarget,
                    fmt::format("unknown bucket {} or {}", ar, neighbor));
  }
  const std::vector<BucketId> near = neighbors_allreduce(g, ar);
  if (!std::binary_search(near.begin(), near.end(), neighbor)) {
    return Rejected(g, RewriteStatus::kNotNeighbors,
                    fmt::format("bucket {} is not a neighbor of {}", neighbor, ar));
  }
  const TensorBucket& a = g.buckets()[*ai];
  const TensorBucket& n = g.buckets()[*ni];
  TensorBucket merged{a.id, SortedUnion(a.members, n.members),
                      a.total_bytes + n.total_bytes};
  std::vector<TensorBucket> buckets;
  buckets.reserve(g.buckets().size() - 1);
  for (size_t i = 0; i < g.buckets().size(); ++i) {
    if (i == *ni) continue;
    buckets.push_back(i == *ai ? merged : g.buckets()[i]);
  }
  return Finish(g, g.WithState(g.groups(), std::move(buckets)),
                fmt::format("ar({}+{})", ar, neighbor));
}

std::vector<std::pair<GroupId, GroupId>> FusionPairs(const HloGraph& g) {
  const Contraction& c = g.contraction();
  std::vector<std::pair<GroupId, GroupId>> pairs;
  for (size_t oi = 0; oi < g.groups().size(); ++oi) {
    if (!c.all_compute[oi]) continue;
    for (int pi : c.pred[oi]) {
      if (!c.all_compute[pi]) continue;
      pairs.emplace_back(g.groups()[oi].id, g.groups()[pi].id);
    }
  }
  return pairs;
}

std::vector<std::pair<BucketId, BucketId>> AllReducePairs(const HloGraph& g) {
  std::vector<std::pair<BucketId, BucketId>> pairs;
  for (const TensorBucket& b : g.buckets()) {
    for (BucketId n : neighbors_allreduce(g, b.id)) pairs.emplace_back(b.id, n);
  }
  return pairs;
}

RewriteOutcome random_apply(const HloGraph& g, OptimizationMethod method, int n,
                            Rng& rng) {
  HloGraph current = g;
  std::vector<std::string> applied;
  for (int step = 0; step < n; ++step) {
    RewriteOutcome outcome;
    if (method == OptimizationMethod::kAllReduceFusion) {
      const auto pairs = AllReducePairs(current);
      if (pairs.empty()) break;
      const auto& [a, b] = pairs[UniformIndex(rng, pairs.size())];
      outcome = fuse_allreduce(current, a, b);
    } else {
      const auto pairs = FusionPairs(current);
      if (pairs.empty()) break;
      const auto& [o, p] = pairs[UniformIndex(rng, pairs.size())];
      outcome = method == OptimizationMethod::kDuplicateFusion
                    ? fuse_dup(current, o, p)
                    : fuse_nondup(current, o, p);
    }
    if (outcome.applied) {
      current = std::move(outcome.graph);
      applied.push_back(std::move(outcome.description));
    }
  }
  if (applied.empty()) {
    return Rejected(g, RewriteStatus::kNoLegalChoice,
                    fmt::format("{}: nothing applied", MethodName(method)));
  }
  return RewriteOutcome{std::move(current), true, RewriteStatus::kApplied,
                        fmt::format("{}", fmt::join(applied, " "))};
}

}  // namespace jfuse

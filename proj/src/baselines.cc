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

#include <algorithm>

#include "jfuse/errors.h"
#include "jfuse/search.h"

namespace jfuse {

HloGraph greedy_postorder_fusion(const HloGraph& g) {
  std::vector<GroupId> order = topo_order(g);
  std::reverse(order.begin(), order.end());
  HloGraph current = g;
  for (GroupId id : order) {
    bool merged = true;
    while (merged) {
      merged = false;
      std::optional<size_t> gi = current.GroupIndex(id);
      if (!gi) break;  // already absorbed by a later group
      const Contraction& c = current.contraction();
      std::vector<std::pair<OpId, GroupId>> preds;
      for (int p : c.pred[*gi]) {
        preds.emplace_back(c.min_op[static_cast<size_t>(p)], current.groups()[static_cast<size_t>(p)].id);
      }
      std::sort(preds.begin(), preds.end());
      for (const auto& [_, pred] : preds) {
        RewriteOutcome o = fuse_nondup(current, id, pred);
        if (o.applied) {
          current = std::move(o.graph);
          merged = true;
          break;
        }
      }
    }
  }
  return current;
}

HloGraph threshold_allreduce_fusion(const HloGraph& g, int64_t threshold_bytes,
                                    const CostProviders& cp) {
  if (threshold_bytes <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "threshold must be positive");
  }
  const Timeline t = simulate(g, cp);
  HloGraph current = g;
  std::optional<BucketId> running;
  for (const TimelineEvent& e : t.comm_events) {
    const BucketId next = e.id;
    const TensorBucket& nb = current.buckets()[*current.BucketIndex(next)];
    if (running) {
      const TensorBucket& rb = current.buckets()[*current.BucketIndex(*running)];
      if (rb.total_bytes + nb.total_bytes <= threshold_bytes) {
        RewriteOutcome o = fuse_allreduce(current, *running, next);
        if (o.applied) {
          current = std::move(o.graph);
          continue;
        }
      }
    }
    running = next;
  }
  return current;
}

}  // namespace jfuse

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

#include "jfuse/cost_providers.h"

#include <memory>
#include <mutex>
#include <unordered_map>

#include "jfuse/hashing.h"

namespace jfuse {

namespace {

struct EstimatorState {
  Profile profile;
  EstimatorModel model;
  std::mutex mu;
  std::unordered_map<uint64_t, double> cache;
};

// Everything the prediction depends on: members, replica flags and which
// members the group publishes.
uint64_t GroupKey(const HloGraph& g, const FusionGroup& group) {
  const Contraction& c = g.contraction();
  const int gi = static_cast<int>(*g.GroupIndex(group.id));
  uint64_t h = g.topology().fingerprint();
  for (OpId op : group.member_ops) {
    const size_t u = *g.topology().OpIndex(op);
    h = HashCombine(h, static_cast<uint64_t>(op) * 4 + (group.IsReplica(op) ? 1 : 0) +
                           (c.provider[u] == gi ? 2 : 0));
  }
  return h;
}

}  // namespace

CostProviders MakeCostProviders(Profile profile, EstimatorModel model,
                                CommModelParams comm) {
  auto state = std::make_shared<EstimatorState>();
  state->profile = std::move(profile);
  state->model = std::move(model);
  CostProviders cp;
  cp.op_cost = [state](const HloGraph& g, const FusionGroup& group) {
    if (group.size() == 1) {
      return lookup(state->profile, g.ops()[*g.topology().OpIndex(group.member_ops[0])]);
    }
    const uint64_t key = GroupKey(g, group);
    {
      std::lock_guard<std::mutex> lock(state->mu);
      auto it = state->cache.find(key);
      if (it != state->cache.end()) return it->second;
    }
    const double us = predict_fused(state->model, featurize(g, group, state->profile));
    std::lock_guard<std::mutex> lock(state->mu);
    state->cache.emplace(key, us);
    return us;
  };
  cp.comm_cost = [comm](const HloGraph&, const TensorBucket& bucket) {
    return predict(comm, static_cast<double>(bucket.total_bytes));
  };
  return cp;
}

}  // namespace jfuse

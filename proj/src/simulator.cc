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

#include "jfuse/simulator.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <tuple>

#include <fmt/format.h>

#include "jfuse/errors.h"

namespace jfuse {

namespace {

double CheckedCost(double value, std::string_view what, int64_t id) {
  if (!std::isfinite(value) || value < 0.0) {
    throw Error(ErrorCode::kInvalidCost,
                fmt::format("{} {} has invalid duration {}", what, id, value));
  }
  return value;
}

void RequireProviders(const CostProviders& cp) {
  if (!cp.op_cost || !cp.comm_cost) {
    throw Error(ErrorCode::kMissingCost, "cost providers are not set");
  }
}

}  // namespace

Timeline simulate(const HloGraph& g, const CostProviders& cp) {
  RequireProviders(cp);
  const Contraction& c = g.contraction();
  const size_t ng = c.num_groups();
  const size_t nb = c.num_buckets();

  std::vector<double> group_cost(ng);
  for (size_t i = 0; i < ng; ++i) {
    group_cost[i] = CheckedCost(cp.op_cost(g, g.groups()[i]), "group",
                                g.groups()[i].id);
  }
  std::vector<double> bucket_cost(nb);
  for (size_t i = 0; i < nb; ++i) {
    bucket_cost[i] = CheckedCost(cp.comm_cost(g, g.buckets()[i]), "bucket",
                                 g.buckets()[i].id);
  }

  std::vector<int> pending(ng + nb, 0);
  for (size_t i = 0; i < ng; ++i) {
    pending[i] = static_cast<int>(c.pred[i].size() + c.group_in_buckets[i].size());
  }
  for (size_t i = 0; i < nb; ++i) {
    pending[ng + i] = static_cast<int>(c.bucket_producers[i].size());
  }
  std::vector<double> deps_done(ng + nb, 0.0);

  // (ready time, smallest op or AllReduce id, member count, index). A replica
  // shares its smallest op with the group it was split from and runs first.
  using Entry = std::tuple<double, int64_t, size_t, size_t>;
  using MinQueue = std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>>;
  MinQueue ready_groups;
  MinQueue ready_buckets;
  auto make_ready = [&](size_t node) {
    if (node < ng) {
      ready_groups.emplace(deps_done[node], c.min_op[node], g.groups()[node].size(), node);
    } else {
      const size_t b = node - ng;
      ready_buckets.emplace(deps_done[node], g.buckets()[b].members.front(), 0, b);
    }
  };
  for (size_t i = 0; i < ng + nb; ++i) {
    if (pending[i] == 0) make_ready(i);
  }
  auto finish = [&](size_t node, double end) {
    deps_done[node] = std::max(deps_done[node], end);
    if (--pending[node] == 0) make_ready(node);
  };

  Timeline t;
  t.compute_events.reserve(ng);
  t.comm_events.reserve(nb);
  double compute_free = 0.0;
  double channel_free = 0.0;
  while (!ready_groups.empty() || !ready_buckets.empty()) {
    const bool have_group = !ready_groups.empty();
    const bool have_bucket = !ready_buckets.empty();
    const double group_start =
        have_group ? std::max(compute_free, std::get<0>(ready_groups.top())) : 0.0;
    const double bucket_start =
        have_bucket ? std::max(channel_free, std::get<0>(ready_buckets.top())) : 0.0;
    if (have_bucket && (!have_group || bucket_start <= group_start)) {
      const size_t b = std::get<3>(ready_buckets.top());
      ready_buckets.pop();
      const double end = bucket_start + bucket_cost[b];
      channel_free = end;
      t.comm_events.push_back({g.buckets()[b].id, bucket_start, end});
      for (int consumer : c.bucket_consumers[b]) finish(static_cast<size_t>(consumer), end);
    } else {
      const size_t gi = std::get<3>(ready_groups.top());
      ready_groups.pop();
      const double end = group_start + group_cost[gi];
      compute_free = end;
      t.compute_events.push_back({g.groups()[gi].id, group_start, end});
      for (int s : c.succ[gi]) finish(static_cast<size_t>(s), end);
      for (int b : c.group_out_buckets[gi]) finish(ng + b, end);
    }
  }
  if (t.compute_events.size() != ng || t.comm_events.size() != nb) {
    throw Error(ErrorCode::kCycle, "contracted graph contains a cycle");
  }
  for (const auto& e : t.compute_events) t.makespan_us = std::max(t.makespan_us, e.end_us);
  for (const auto& e : t.comm_events) t.makespan_us = std::max(t.makespan_us, e.end_us);
  return t;
}

double cost(const HloGraph& g, const CostProviders& cp) {
  return simulate(g, cp).makespan_us;
}

ModuleStats module_stats(const HloGraph& g, const CostProviders& cp) {
  RequireProviders(cp);
  std::map<GroupId, double> group_costs;
  for (const FusionGroup& group : g.groups()) {
    group_costs[group.id] = CheckedCost(cp.op_cost(g, group), "group", group.id);
  }
  std::map<BucketId, double> bucket_costs;
  for (const TensorBucket& bucket : g.buckets()) {
    bucket_costs[bucket.id] = CheckedCost(cp.comm_cost(g, bucket), "bucket", bucket.id);
  }
  return module_stats(g, group_costs, bucket_costs);
}

double fo_bound(const HloGraph& g, const CostProviders& cp) {
  const ModuleStats s = module_stats(g, cp);
  return std::max(s.total_compute_us, s.total_comm_us);
}

std::string FormatTimeline(const Timeline& t) {
  struct Row {
    double start;
    int kind;  // 0 compute, 1 comm
    int64_t id;
    double end;
  };
  std::vector<Row> rows;
  for (const auto& e : t.compute_events) rows.push_back({e.start_us, 0, e.id, e.end_us});
  for (const auto& e : t.comm_events) rows.push_back({e.start_us, 1, e.id, e.end_us});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.start, a.kind, a.id) < std::tie(b.start, b.kind, b.id);
  });
  std::string out = "kind\tid\tstart_us\tend_us\n";
  for (const Row& r : rows) {
    out += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\n", r.kind == 0 ? "compute" : "comm",
                       r.id, r.start, r.end);
  }
  out += fmt::format("makespan_us\t{:.6f}\n", t.makespan_us);
  return out;
}

std::string TimelineGanttSvg(const Timeline& t) {
  constexpr double kWidth = 1200.0;
  constexpr double kLane = 30.0;
  const double scale = t.makespan_us > 0.0 ? kWidth / t.makespan_us : 0.0;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\">\n",
      kWidth + 20, 3 * kLane + 20);
  auto lane = [&](const std::vector<TimelineEvent>& events, double y,
                  const char* fill, const char* kind) {
    for (const auto& e : events) {
      out += fmt::format(
          "<rect x=\"{:.3f}\" y=\"{:.1f}\" width=\"{:.3f}\" height=\"{:.1f}\" "
          "fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\">"
          "<title>{} {} [{:.3f}, {:.3f}]</title></rect>\n",
          10 + e.start_us * scale, y, (e.end_us - e.start_us) * scale, kLane - 4,
          fill, kind, e.id, e.start_us, e.end_us);
    }
  };
  lane(t.compute_events, 10, "#4e79a7", "compute");
  lane(t.comm_events, 10 + kLane + 10, "#f28e2b", "comm");
  out += "</svg>\n";
  return out;
}

}  // namespace jfuse

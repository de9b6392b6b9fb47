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

#ifndef JFUSE_SIMULATOR_H_
#define JFUSE_SIMULATOR_H_

#include <functional>
#include <string>
#include <vector>

#include "jfuse/graph_ir.h"

namespace jfuse {

struct TimelineEvent {
  int64_t id = 0;  // group id or bucket id
  double start_us = 0.0;
  double end_us = 0.0;
};

struct Timeline {
  std::vector<TimelineEvent> compute_events;  // execution order
  std::vector<TimelineEvent> comm_events;     // transmission order
  double makespan_us = 0.0;
};

// Durations for fused compute groups and AllReduce buckets. Both callables
// must be set; returned values must be finite and non-negative.
struct CostProviders {
  std::function<double(const HloGraph&, const FusionGroup&)> op_cost;
  std::function<double(const HloGraph&, const TensorBucket&)> comm_cost;
};

// Discrete-event simulation of one iteration on a single compute stream and a
// single communication channel.
//
// Compute groups are dispatched from a ready queue ordered by the time their
// dependencies cleared (ties: smallest member op id). A bucket becomes ready
// once every member tensor has been produced; buckets go out one at a time in
// order of readiness. Groups that consume reduced tensors wait for the
// bucket's end. Throws Error(kCycle), Error(kMissingCost), Error(kInvalidCost).
Timeline simulate(const HloGraph& g, const CostProviders& cp);

// Makespan of simulate().
double cost(const HloGraph& g, const CostProviders& cp);

// max(total compute, total communication): perfect overlap, no dependencies.
double fo_bound(const HloGraph& g, const CostProviders& cp);

ModuleStats module_stats(const HloGraph& g, const CostProviders& cp);

// Tab-separated table "kind id start_us end_us" sorted by start, followed by
// a "makespan_us" footer line.
std::string FormatTimeline(const Timeline& t);

// One rectangle per event: compute lane on top, communication lane below.
std::string TimelineGanttSvg(const Timeline& t);

}  // namespace jfuse

#endif  // JFUSE_SIMULATOR_H_

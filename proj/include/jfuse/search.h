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

#ifndef JFUSE_SEARCH_H_
#define JFUSE_SEARCH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jfuse/graph_ir.h"
#include "jfuse/rewrite.h"
#include "jfuse/simulator.h"

namespace jfuse {

struct SearchConfig {
  double alpha = 1.05;
  int beta = 10;
  int64_t max_unchanged = 1000;
  uint64_t seed = 1;
  std::vector<OptimizationMethod> methods{std::begin(kAllMethods),
                                          std::end(kAllMethods)};
  std::optional<double> time_budget_s;
  int jobs = 1;  // concurrent candidate evaluations
};

// Throws Error(kInvalidConfig).
void ValidateSearchConfig(const SearchConfig& cfg);

struct TraceRecord {
  int64_t step = 0;
  std::string action;  // "<method>x<n>"
  double cost_us = 0.0;
  double best_cost_us = 0.0;  // after this candidate was considered
  size_t queue_len = 0;       // after this candidate was considered
  bool enqueued = false;
};

struct SearchResult {
  HloGraph best;
  double best_cost_us = 0.0;
  double initial_cost_us = 0.0;
  int64_t steps = 0;                 // dequeued states
  int64_t candidates_evaluated = 0;  // candidates whose cost was looked at
  int64_t simulations = 0;           // distinct states simulated
  int64_t enqueued = 0;
  std::vector<TraceRecord> trace;
};

// Priority-queue backtracking over the three rewrite methods. Every dequeued
// state gets each enabled method applied independently a random number of
// times in [0, beta]; a candidate improves the best state if cheaper and is
// queued if unseen and within alpha of the best cost. Stops when the queue
// drains, after max_unchanged consecutive non-improving candidates, or when
// the time budget runs out.
SearchResult backtracking_search(const HloGraph& g0, const SearchConfig& cfg,
                                 const CostProviders& cp);

struct ExhaustiveLimits {
  size_t max_ops = 8;
  size_t max_tensors = 4;
  size_t max_states = 1000000;
  std::vector<OptimizationMethod> methods{std::begin(kAllMethods),
                                          std::end(kAllMethods)};
};

// Cheapest state reachable from g0 by any sequence of single rewrites.
// Throws Error(kLimitExceeded) when g0 or the state space exceeds the limits.
SearchResult exhaustive_search(const HloGraph& g0, const CostProviders& cp,
                               const ExhaustiveLimits& limits = {});

// Visits groups in reverse topological order and repeatedly merges each with
// its first predecessor (by smallest member op id) that admits a
// non-duplicate fusion.
HloGraph greedy_postorder_fusion(const HloGraph& g);

// Walks buckets in the order the simulator transmits them and merges each
// into the running bucket while the running total stays within the threshold
// and the two are neighbors.
HloGraph threshold_allreduce_fusion(const HloGraph& g, int64_t threshold_bytes,
                                    const CostProviders& cp);

// "step action cost_us best_cost_us queue_len enqueued" per record.
std::string FormatTrace(const SearchResult& r);

}  // namespace jfuse

#endif  // JFUSE_SEARCH_H_

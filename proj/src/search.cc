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

#include "jfuse/search.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <future>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "jfuse/errors.h"
#include "jfuse/random.h"

namespace jfuse {

void ValidateSearchConfig(const SearchConfig& cfg) {
  if (!(cfg.alpha >= 1.0) || !std::isfinite(cfg.alpha)) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("alpha must be >= 1, got {}", cfg.alpha));
  }
  if (cfg.beta < 1) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("beta must be >= 1, got {}", cfg.beta));
  }
  if (cfg.max_unchanged < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_unchanged must be >= 1");
  }
  if (cfg.methods.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "at least one method must be enabled");
  }
  if (cfg.jobs < 1) throw Error(ErrorCode::kInvalidConfig, "jobs must be >= 1");
  if (cfg.time_budget_s && !(*cfg.time_budget_s > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "time budget must be positive");
  }
}

namespace {

struct QueueEntry {
  double cost;
  int64_t seq;
  size_t state;  // index into the state store
  bool operator>(const QueueEntry& o) const {
    return cost != o.cost ? cost > o.cost : seq > o.seq;
  }
};

struct Candidate {
  std::string action;
  HloGraph graph;
  uint64_t hash = 0;
  std::optional<double> cost;  // filled from the memo or by simulation
};

}  // namespace

SearchResult backtracking_search(const HloGraph& g0, const SearchConfig& cfg,
                                 const CostProviders& cp) {
  ValidateSearchConfig(cfg);
  const auto started = std::chrono::steady_clock::now();
  auto out_of_time = [&]() {
    if (!cfg.time_budget_s) return false;
    const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - started;
    return spent.count() >= *cfg.time_budget_s;
  };

  SearchResult r;
  std::unordered_map<uint64_t, double> memo;
  std::unordered_set<uint64_t> seen;
  std::vector<HloGraph> store;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;

  const uint64_t h0 = canonical_hash(g0);
  const double c0 = cost(g0, cp);
  r.simulations = 1;
  memo.emplace(h0, c0);
  seen.insert(h0);
  store.push_back(g0);
  int64_t seq = 0;
  queue.push(QueueEntry{c0, seq++, 0});
  r.enqueued = 1;
  r.initial_cost_us = c0;
  r.best_cost_us = c0;
  r.best = g0;

  Rng rng(cfg.seed);
  int64_t unchanged = 0;
  while (!queue.empty() && unchanged < cfg.max_unchanged && !out_of_time()) {
    const QueueEntry top = queue.top();
    queue.pop();
    ++r.steps;
    const HloGraph h = std::move(store[top.state]);
    store[top.state] = HloGraph();

    std::vector<Candidate> cands;
    for (OptimizationMethod m : cfg.methods) {
      const int n = static_cast<int>(UniformInt(rng, 0, cfg.beta));
      RewriteOutcome o = random_apply(h, m, n, rng);
      Candidate c;
      c.action = fmt::format("{}x{}", MethodName(m), n);
      c.graph = o.applied ? std::move(o.graph) : h;
      c.hash = canonical_hash(c.graph);
      auto it = memo.find(c.hash);
      if (it != memo.end()) c.cost = it->second;
      cands.push_back(std::move(c));
    }

    // Distinct unseen states are simulated, possibly in parallel.
    std::vector<size_t> todo;
    for (size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].cost) continue;
      bool dup = false;
      for (size_t j : todo) dup = dup || cands[j].hash == cands[i].hash;
      if (!dup) todo.push_back(i);
    }
    std::vector<double> costs(todo.size());
    const size_t jobs = static_cast<size_t>(cfg.jobs);
    for (size_t begin = 0; begin < todo.size(); begin += jobs) {
      const size_t end = std::min(todo.size(), begin + jobs);
      if (end - begin == 1) {
        costs[begin] = cost(cands[todo[begin]].graph, cp);
        continue;
      }
      std::vector<std::future<double>> futures;
      for (size_t k = begin; k < end; ++k) {
        futures.push_back(std::async(std::launch::async, [&cands, &todo, &cp, k]() {
          return cost(cands[todo[k]].graph, cp);
        }));
      }
      for (size_t k = begin; k < end; ++k) costs[k] = futures[k - begin].get();
    }
    for (size_t k = 0; k < todo.size(); ++k) {
      memo.emplace(cands[todo[k]].hash, costs[k]);
      ++r.simulations;
    }

    for (Candidate& c : cands) {
      const double cc = memo.at(c.hash);
      ++r.candidates_evaluated;
      if (cc < r.best_cost_us) {
        r.best_cost_us = cc;
        r.best = c.graph;
        unchanged = 0;
      } else {
        ++unchanged;
      }
      TraceRecord rec;
      rec.step = r.steps;
      rec.action = c.action;
      rec.cost_us = cc;
      if (seen.insert(c.hash).second && cc <= cfg.alpha * r.best_cost_us) {
        store.push_back(std::move(c.graph));
        queue.push(QueueEntry{cc, seq++, store.size() - 1});
        ++r.enqueued;
        rec.enqueued = true;
      }
      rec.best_cost_us = r.best_cost_us;
      rec.queue_len = queue.size();
      r.trace.push_back(std::move(rec));
    }
  }
  return r;
}

namespace {

std::vector<RewriteOutcome> AllSingleRewrites(const HloGraph& g,
                                              const std::vector<OptimizationMethod>& methods) {
  std::vector<RewriteOutcome> out;
  for (OptimizationMethod m : methods) {
    if (m == OptimizationMethod::kAllReduceFusion) {
      for (const auto& [a, b] : AllReducePairs(g)) {
        if (a > b) continue;  // the neighbor relation is symmetric
        RewriteOutcome o = fuse_allreduce(g, a, b);
        if (o.applied) out.push_back(std::move(o));
      }
    } else {
      for (const auto& [o_id, p_id] : FusionPairs(g)) {
        RewriteOutcome o = m == OptimizationMethod::kDuplicateFusion
                               ? fuse_dup(g, o_id, p_id)
                               : fuse_nondup(g, o_id, p_id);
        if (o.applied) out.push_back(std::move(o));
      }
    }
  }
  return out;
}

}  // namespace

SearchResult exhaustive_search(const HloGraph& g0, const CostProviders& cp,
                               const ExhaustiveLimits& limits) {
  if (g0.ops().size() > limits.max_ops || g0.allreduces().size() > limits.max_tensors) {
    throw Error(ErrorCode::kLimitExceeded,
                fmt::format("exhaustive search is limited to {} ops and {} tensors, "
                            "graph has {} and {}",
                            limits.max_ops, limits.max_tensors, g0.ops().size(),
                            g0.allreduces().size()));
  }
  SearchResult r;
  std::unordered_set<uint64_t> seen{canonical_hash(g0)};
  std::deque<HloGraph> frontier{g0};
  r.initial_cost_us = cost(g0, cp);
  r.best = g0;
  r.best_cost_us = r.initial_cost_us;
  r.simulations = 1;
  r.candidates_evaluated = 1;
  while (!frontier.empty()) {
    HloGraph g = std::move(frontier.front());
    frontier.pop_front();
    ++r.steps;
    for (RewriteOutcome& o : AllSingleRewrites(g, limits.methods)) {
      if (!seen.insert(canonical_hash(o.graph)).second) continue;
      if (seen.size() > limits.max_states) {
        throw Error(ErrorCode::kLimitExceeded,
                    fmt::format("more than {} reachable states", limits.max_states));
      }
      const double c = cost(o.graph, cp);
      ++r.simulations;
      ++r.candidates_evaluated;
      if (c < r.best_cost_us) {
        r.best_cost_us = c;
        r.best = o.graph;
      }
      frontier.push_back(std::move(o.graph));
    }
  }
  r.enqueued = static_cast<int64_t>(seen.size());
  return r;
}

std::string FormatTrace(const SearchResult& r) {
  std::string out = "step\taction\tcost_us\tbest_cost_us\tqueue_len\tenqueued\n";
  for (const TraceRecord& t : r.trace) {
    out += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{}\t{}\n", t.step, t.action, t.cost_us,
                       t.best_cost_us, t.queue_len, t.enqueued ? 1 : 0);
  }
  return out;
}

}  // namespace jfuse

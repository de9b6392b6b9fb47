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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "gradient_check.h"
#include "jfuse/comm_model.h"
#include "jfuse/estimator.h"
#include "jfuse/graph_io.h"
#include "jfuse/random.h"
#include "jfuse/rewrite.h"
#include "jfuse/search.h"
#include "jfuse/simulator.h"
#include "jfuse/workloads.h"
#include "test_graphs.h"

namespace jfuse {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Checks the never-worse and pruning invariants of every search run.
class SearchAudit {
 public:
  void Record(const SearchResult& r, double alpha) {
    ++runs_;
    if (r.best_cost_us > r.initial_cost_us) {
      ++violations_;
      note(fmt::format("best {} > initial {}", r.best_cost_us, r.initial_cost_us));
    }
    for (const TraceRecord& t : r.trace) {
      ++records_;
      if (t.enqueued && t.cost_us > alpha * t.best_cost_us) {
        ++violations_;
        note(fmt::format("step {} enqueued {} > {} * {}", t.step, t.cost_us, alpha,
                         t.best_cost_us));
      }
    }
  }

  int64_t runs() const { return runs_; }
  int64_t records() const { return records_; }
  int64_t violations() const { return violations_; }
  const std::string& first() const { return first_; }

 private:
  void note(std::string s) {
    if (first_.empty()) first_ = std::move(s);
  }
  int64_t runs_ = 0;
  int64_t records_ = 0;
  int64_t violations_ = 0;
  std::string first_;
};

SearchAudit g_audit;

SearchResult AuditedSearch(const HloGraph& g, const SearchConfig& cfg,
                           const CostProviders& cp) {
  SearchResult r = backtracking_search(g, cfg, cp);
  g_audit.Record(r, cfg.alpha);
  return r;
}

// 1. fo_bound <= cost <= total compute + total comm on random workloads.
Outcome SimulatorBounds() {
  const auto start = Clock::now();
  const CostProviders cp = MakeOracleProviders(HardwareParams::Default());
  int violations = 0;
  int checks = 0;
  for (uint64_t seed = 1; seed <= 1000; ++seed) {
    const HloGraph g0 = gen_workload(testing::RandomSpec(seed, 10, 200, 30));
    Rng rng(seed);
    const HloGraph g1 =
        random_apply(g0, kAllMethods[seed % 3], static_cast<int>(UniformInt(rng, 1, 10)), rng)
            .graph;
    for (const HloGraph* g : {&g0, &g1}) {
      const double c = cost(*g, cp);
      const ModuleStats s = module_stats(*g, cp);
      const double upper = s.total_compute_us + s.total_comm_us;
      ++checks;
      if (!(fo_bound(*g, cp) <= c * (1 + 1e-12)) || !(c <= upper * (1 + 1e-12))) ++violations;
    }
  }
  const double secs = Seconds(start);
  return {violations == 0 && secs < 30.0,
          fmt::format("{} graphs, {} violations, {:.1f} s (limit 30 s)", checks, violations,
                      secs)};
}

// 2. Best of 20 seeded searches versus the exhaustive optimum.
Outcome OracleEquivalence() {
  const auto start = Clock::now();
  const CostProviders cp = MakeOracleProviders(HardwareParams::Default());
  int within = 0;
  int below = 0;
  int instances = 0;
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed * 7919);
    HloGraph g;
    if (seed % 2 == 1) {
      const int ops = static_cast<int>(UniformInt(rng, 2, 8));
      g = testing::RandomSmallGraph(seed, ops, static_cast<int>(UniformInt(rng, 0, 4)));
    } else {
      WorkloadSpec spec;
      spec.family = static_cast<WorkloadFamily>(UniformIndex(rng, 4));
      spec.op_count = UniformInt(rng, 3, 8);
      spec.tensor_count = UniformInt(rng, 0, std::min<int64_t>(4, spec.op_count - 2));
      spec.seed = seed;
      g = gen_workload(spec);
    }
    const SearchResult ex = exhaustive_search(g, cp);
    double best = std::numeric_limits<double>::infinity();
    for (uint64_t s = 1; s <= 20; ++s) {
      SearchConfig cfg;
      cfg.alpha = 1.1;
      cfg.beta = 2;
      cfg.seed = s;
      best = std::min(best, AuditedSearch(g, cfg, cp).best_cost_us);
    }
    ++instances;
    const double gap = best / ex.best_cost_us - 1.0;
    worst = std::max(worst, gap);
    if (gap <= 0.05) ++within;
    if (best < ex.best_cost_us * (1 - 1e-12)) ++below;
  }
  const double secs = Seconds(start);
  const bool pass = within >= 45 && below == 0 && secs < 120.0;
  return {pass, fmt::format("{}/{} within 5% (need 45), {} below optimum, worst gap {:.2f}%, "
                            "{:.1f} s (limit 120 s)",
                            within, instances, below, 100 * worst, secs)};
}

// 3. Never-worse and pruning invariants over every search in this suite.
Outcome SearchInvariants() {
  const CostProviders cp = MakeOracleProviders(HardwareParams::Default());
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    const HloGraph g = gen_workload(testing::RandomSpec(seed, 10, 120, 20));
    SearchConfig cfg;
    cfg.seed = seed;
    cfg.alpha = 1.0 + 0.05 * static_cast<double>(seed % 5);
    cfg.beta = 1 + static_cast<int>(seed % 12);
    cfg.max_unchanged = 200;
    AuditedSearch(g, cfg, cp);
  }
  return {g_audit.violations() == 0,
          fmt::format("{} runs, {} trace records, {} violations{}", g_audit.runs(),
                      g_audit.records(), g_audit.violations(),
                      g_audit.first().empty() ? "" : " (first: " + g_audit.first() + ")")};
}

// 4. Delayed communication: fusing is worse when comm dominates, better
// when compute savings dominate.
Outcome DelayedCommunication() {
  auto ops_fused = [](const HloGraph& g) {
    for (const FusionGroup& grp : g.groups()) {
      if (grp.Contains(1) && grp.Contains(2) && grp.Contains(3)) return true;
    }
    return false;
  };
  auto ops_apart = [](const HloGraph& g) {
    for (const FusionGroup& grp : g.groups()) {
      int n = 0;
      for (OpId op : {1, 2, 3}) n += grp.Contains(op) ? 1 : 0;
      if (n > 1) return false;
    }
    return true;
  };
  const testing::DelayedCommCase heavy = testing::MakeDelayedCommCase(0.06, 10);
  const SearchResult a = exhaustive_search(heavy.graph, heavy.providers);
  const testing::DelayedCommCase light = testing::MakeDelayedCommCase(0.001, 1);
  const SearchResult b = exhaustive_search(light.graph, light.providers);
  const bool pass = ops_apart(a.best) && ops_fused(b.best);
  return {pass, fmt::format("comm-dominant optimum {:.1f} us ops {}; savings-dominant optimum "
                            "{:.1f} us ops {}",
                            a.best_cost_us, ops_apart(a.best) ? "unfused" : "FUSED",
                            b.best_cost_us, ops_fused(b.best) ? "fused" : "NOT FUSED")};
}

// 5. Comm model fit and the ring formula.
Outcome CommModel() {
  const CommModelParams truth{1e-4, 30.0};
  Rng rng(5);
  std::vector<CommSample> exact;
  std::vector<CommSample> noisy;
  for (int i = 0; i < 1000; ++i) {
    const double x = std::round(LogUniform(rng, 4096, 64.0 * 1024 * 1024));
    const double t = predict(truth, x);
    exact.push_back({x, t});
    noisy.push_back({x, t * (1 + 0.05 * UniformReal(rng, -1, 1))});
  }
  const CommModelParams e = fit(exact).params;
  const CommModelParams n = fit(noisy).params;
  const double ec = std::abs(e.C / truth.C - 1);
  const double ed = std::abs(e.D / truth.D - 1);
  const double nc = std::abs(n.C / truth.C - 1);
  const double nd = std::abs(n.D / truth.D - 1);
  const double ring = ring_allreduce_time(4.0 * 1024 * 1024, 4, 1000);
  const bool pass = ec <= 1e-9 && ed <= 1e-9 && nc <= 0.02 && nd <= 0.02 && ring == 6291.456;
  return {pass, fmt::format("noiseless rel err C {:.1e} D {:.1e}; 5% noise rel err C {:.2f}% "
                            "D {:.2f}%; ring {:.6f} us",
                            ec, ed, 100 * nc, 100 * nd, ring)};
}

// 6. Learned estimator accuracy on held-out oracle-labeled fused subgraphs.
Outcome EstimatorAccuracy() {
  HardwareParams hw = HardwareParams::Default();
  hw.noise = 0.05;
  hw.seed = 6;
  std::vector<TrainSample> all;
  const WorkloadFamily families[] = {WorkloadFamily::kChain, WorkloadFamily::kResidual,
                                     WorkloadFamily::kAttention, WorkloadFamily::kRecurrent};
  for (size_t i = 0; i < 4; ++i) {
    WorkloadSpec spec;
    spec.family = families[i];
    spec.op_count = 200;
    spec.tensor_count = 20;
    spec.seed = 100 + i;
    const HloGraph g = gen_workload(spec);
    const std::vector<TrainSample> s = gen_training_samples(g, 1500, 1, 50, hw, 200 + i);
    all.insert(all.end(), s.begin(), s.end());
  }
  Rng rng(66);
  Shuffle(all, rng);
  const std::vector<TrainSample> train_set(all.begin(), all.begin() + 5000);
  const std::vector<TrainSample> held_out(all.begin() + 5000, all.end());

  const auto start = Clock::now();
  TrainConfig cfg;
  cfg.seed = 6;
  const TrainResult r = train(train_set, cfg, EstimatorVariant::kMessagePassing);
  const double secs = Seconds(start);
  int good = 0;
  std::vector<double> errs;
  for (const TrainSample& s : held_out) {
    const double err = std::abs(predict_fused(r.model, s.features) / s.actual_us - 1);
    errs.push_back(err);
    if (err <= 0.14) ++good;
  }
  const double frac = static_cast<double>(good) / static_cast<double>(held_out.size());
  return {frac >= 0.9 && secs < 900.0,
          fmt::format("{:.1f}% of {} held-out within 14% (need 90%), median error {:.2f}%, "
                      "best epoch {}, training {:.0f} s (limit 900 s)",
                      100 * frac, held_out.size(), 100 * Median(errs), r.best_epoch, secs)};
}

// 7. Analytic gradients versus quad-precision central differences.
Outcome GradientChecks() {
  const testing::GradientCheckSummary lin =
      testing::CheckLearnedGradients(EstimatorVariant::kLinearFeatures, 100, 71);
  const testing::GradientCheckSummary mp =
      testing::CheckLearnedGradients(EstimatorVariant::kMessagePassing, 100, 72);
  const bool pass = lin.violations == 0 && mp.violations == 0 && lin.checked > 0 &&
                    mp.checked > 0;
  return {pass, fmt::format("linear: {} draws, {} grads, max rel err {:.1e}; mp: {} draws, {} "
                            "grads, max rel err {:.1e}",
                            lin.draws, lin.checked, lin.max_rel_err, mp.draws, mp.checked,
                            mp.max_rel_err)};
}

HloGraph CommHeavyWorkload() {
  WorkloadSpec spec;
  spec.family = WorkloadFamily::kAttention;
  spec.op_count = 60;
  spec.tensor_count = 24;
  spec.min_tensor_bytes = 4 << 10;
  spec.max_tensor_bytes = 1 << 20;
  spec.seed = 8;
  return gen_workload(spec);
}

// 8. Adding optimization methods never raises the median best cost.
Outcome Ablation() {
  HardwareParams hw = HardwareParams::Default();
  hw.comm = CommModelParams{1e-4, 300.0};
  const CostProviders cp = MakeOracleProviders(hw);
  const HloGraph g = CommHeavyWorkload();
  using M = OptimizationMethod;
  const std::vector<std::vector<M>> masks = {
      {M::kNonDuplicateFusion},
      {M::kNonDuplicateFusion, M::kDuplicateFusion},
      {M::kNonDuplicateFusion, M::kDuplicateFusion, M::kAllReduceFusion}};
  std::vector<double> medians;
  for (const auto& mask : masks) {
    std::vector<double> best;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      SearchConfig cfg;
      cfg.seed = seed;
      cfg.methods = mask;
      best.push_back(AuditedSearch(g, cfg, cp).best_cost_us);
    }
    medians.push_back(Median(best));
  }
  const bool pass = medians[0] >= medians[1] && medians[1] >= medians[2];
  return {pass, fmt::format("initial {:.1f} us; median best nondup {:.1f}, +dup {:.1f}, +ar "
                            "{:.1f}",
                            cost(g, cp), medians[0], medians[1], medians[2])};
}

// 9. Direction of the alpha and beta trade-offs.
Outcome AlphaBeta() {
  const CostProviders cp = MakeOracleProviders(HardwareParams::Default());
  WorkloadSpec spec;
  spec.family = WorkloadFamily::kResidual;
  spec.op_count = 100;
  spec.tensor_count = 20;
  spec.seed = 9;
  const HloGraph g = gen_workload(spec);
  // A run that stops before max_unchanged candidates emptied its queue.
  auto run = [&](double alpha, int beta) {
    std::vector<double> best;
    std::vector<double> evaluated;
    int exhausted = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      SearchConfig cfg;
      cfg.alpha = alpha;
      cfg.beta = beta;
      cfg.seed = seed;
      const SearchResult r = AuditedSearch(g, cfg, cp);
      best.push_back(r.best_cost_us);
      evaluated.push_back(static_cast<double>(r.candidates_evaluated));
      if (r.candidates_evaluated < cfg.max_unchanged) ++exhausted;
    }
    return std::make_tuple(Median(best), Median(evaluated), exhausted);
  };
  const auto a10 = run(1.0, 10);
  const auto a11 = run(1.1, 10);
  const auto b1 = run(1.05, 1);
  const auto b30 = run(1.05, 30);
  const auto [a10_best, a10_eval, a10_ex] = a10;
  const auto [a11_best, a11_eval, a11_ex] = a11;
  const auto [b1_best, b1_eval, b1_ex] = b1;
  const auto [b30_best, b30_eval, b30_ex] = b30;
  const bool pass = a11_best <= a10_best && a11_eval > a10_eval && b30_eval < b1_eval;
  return {pass,
          fmt::format("alpha 1.0: best {:.1f} us, {:.0f} evaluated; alpha 1.1: best {:.1f} us, "
                      "{:.0f} evaluated; beta 1: {:.0f} evaluated, {}/10 runs emptied the queue; "
                      "beta 30: {:.0f} evaluated, {}/10 runs emptied the queue",
                      a10_best, a10_eval, a11_best, a11_eval, b1_eval, b1_ex, b30_eval, b30_ex)};
}

int Shell(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// 10. Every command rerun with identical seeds writes identical bytes.
Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("jfuse_accept_{}", ::getpid());
  fs::remove_all(root);
  const std::string cli = JFUSE_CLI_PATH;
  const std::vector<std::string> steps = {
      "--seed 4 gen --family attention --ops 48 --tensors 10 -o {d}/g.json",
      "--seed 4 gen --family recurrent --ops 7 --tensors 2 -o {d}/small.json",
      "--seed 4 profile --graph {d}/g.json --out-profile {d}/p.json --out-comm {d}/c.txt "
      "--noise 0.05",
      "fit-comm --samples {d}/c.txt -o {d}/comm.json",
      "--seed 4 train-est --graph {d}/g.json --count 400 --epochs 3 --noise 0.05 "
      "-o {d}/m.json --report {d}/r.txt --samples-out {d}/s.jsonl",
      "--seed 4 train-est --samples {d}/s.jsonl --variant linear --epochs 20 -o {d}/lin.json",
      "simulate --graph {d}/g.json --profile {d}/p.json --comm {d}/comm.json --model "
      "{d}/m.json -o {d}/t.tsv --gantt {d}/t.svg",
      "--seed 4 optimize --graph {d}/g.json --profile {d}/p.json --comm {d}/comm.json "
      "--model {d}/m.json --max-unchanged 200 --jobs 2 -o {d}/best.json --trace "
      "{d}/trace.tsv --report {d}/rep.tsv",
      "exhaustive --graph {d}/small.json -o {d}/ex.json --report {d}/ex.tsv",
      "--seed 4 compare --graph {d}/g.json --max-unchanged 200 -o {d}/cmp.tsv",
  };
  int failures = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    for (size_t i = 0; i < steps.size(); ++i) {
      std::string args = steps[i];
      for (size_t at = args.find("{d}"); at != std::string::npos; at = args.find("{d}")) {
        args.replace(at, 3, dir.string());
      }
      if (Shell(fmt::format("{} {} > {}/stdout{}.txt 2>&1", cli, args, dir.string(), i)) != 0) {
        ++failures;
      }
    }
  }
  size_t files = 0;
  size_t differing = 0;
  std::string first_diff;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const fs::path other = root / "b" / entry.path().filename();
    ++files;
    if (!fs::exists(other) || ReadTextFile(entry.path().string()) != ReadTextFile(other.string())) {
      ++differing;
      if (first_diff.empty()) first_diff = entry.path().filename().string();
    }
  }
  fs::remove_all(root);
  return {failures == 0 && differing == 0 && files >= 2 * steps.size(),
          fmt::format("{} commands x 2 runs, {} failed, {} files compared, {} differ{}",
                      steps.size(), failures, files, differing,
                      first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace
}  // namespace jfuse

int main() {
  using jfuse::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"simulator bounds", jfuse::SimulatorBounds},
      {"oracle equivalence", jfuse::OracleEquivalence},
      {"never-worse and pruning", nullptr},
      {"delayed communication", jfuse::DelayedCommunication},
      {"comm model", jfuse::CommModel},
      {"estimator accuracy", jfuse::EstimatorAccuracy},
      {"gradient checks", jfuse::GradientChecks},
      {"ablation direction", jfuse::Ablation},
      {"alpha/beta direction", jfuse::AlphaBeta},
      {"determinism", jfuse::Determinism},
  };
  // Criterion 3 audits the searches of the other criteria, so it runs last.
  std::vector<Outcome> results(criteria.size());
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (criteria[i].second) {
      results[i] = criteria[i].second();
      std::fprintf(stderr, "[%zu done]\n", i + 1);
    }
  }
  results[2] = jfuse::SearchInvariants();
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    std::printf("%s %zu %s: %s\n", results[i].pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), results[i].detail.c_str());
    failed += results[i].pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<size_t>(failed),
              criteria.size());
  return failed == 0 ? 0 : 1;
}

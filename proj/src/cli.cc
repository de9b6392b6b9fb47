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

#include "jfuse/cli.h"

#include <algorithm>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "jfuse/comm_model.h"
#include "jfuse/cost_providers.h"
#include "jfuse/errors.h"
#include "jfuse/estimator.h"
#include "jfuse/graph_io.h"
#include "jfuse/search.h"
#include "jfuse/simulator.h"
#include "jfuse/workloads.h"

namespace jfuse {

namespace {

std::vector<OptimizationMethod> ParseMethodList(const std::string& text) {
  std::vector<OptimizationMethod> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::optional<OptimizationMethod> m = ParseMethod(item);
    if (!m) {
      throw Error(ErrorCode::kUsage,
                  fmt::format("unknown method '{}' (expected nondup, dup, ar)", item));
    }
    if (std::find(out.begin(), out.end(), *m) != out.end()) {
      throw Error(ErrorCode::kUsage, fmt::format("method '{}' listed twice", item));
    }
    out.push_back(*m);
  }
  if (out.empty()) throw Error(ErrorCode::kUsage, "--methods needs at least one method");
  return out;
}

void AddHardwareOptions(CLI::App* app, Command& cmd) {
  app->add_option("--launch-us", cmd.launch_us, "Kernel launch overhead (us)")
      ->check(CLI::PositiveNumber);
  app->add_option("--mem-us-per-byte", cmd.mem_us_per_byte,
                  "Device memory traffic cost (us per byte)")
      ->check(CLI::PositiveNumber);
  app->add_option("--comm-c", cmd.comm_c, "AllReduce cost per byte (us)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--comm-d", cmd.comm_d, "AllReduce fixed cost (us)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--noise", cmd.noise, "Relative timing jitter in [0, 0.5]")
      ->check(CLI::Range(0.0, 0.5));
}

void AddCostOptions(CLI::App* app, Command& cmd) {
  app->add_option("--graph", cmd.graph, "Graph file")->required();
  app->add_option("--profile", cmd.profile, "Profile file (omit with --comm to use the oracle)");
  app->add_option("--comm", cmd.comm, "Fitted AllReduce model file");
  app->add_option("--model", cmd.model, "Estimator model file (default: analytic)");
  AddHardwareOptions(app, cmd);
}

void AddSearchOptions(CLI::App* app, Command& cmd, std::string& methods,
                      double& budget) {
  app->add_option("--alpha", cmd.alpha, "Pruning factor (>= 1)");
  app->add_option("--beta", cmd.beta, "Max random applications per method per step (>= 1)");
  app->add_option("--max-unchanged", cmd.max_unchanged,
                  "Stop after this many non-improving candidates");
  app->add_option("--methods", methods, "Comma-separated subset of nondup,dup,ar");
  app->add_option("--time-budget", budget, "Wall-clock budget in seconds");
  app->add_option("--jobs", cmd.jobs, "Concurrent candidate evaluations")
      ->check(CLI::PositiveNumber);
}

HardwareParams HardwareFrom(const Command& cmd) {
  HardwareParams hw = HardwareParams::Default();
  hw.launch_overhead_us = cmd.launch_us;
  hw.mem_us_per_byte = cmd.mem_us_per_byte;
  hw.comm = CommModelParams{cmd.comm_c, cmd.comm_d};
  hw.noise = cmd.noise;
  hw.seed = cmd.seed;
  return hw;
}

CostProviders ProvidersFrom(const Command& cmd) {
  if (cmd.profile.empty() && cmd.comm.empty()) {
    if (!cmd.model.empty()) {
      throw Error(ErrorCode::kUsage, "--model needs --profile and --comm");
    }
    return MakeOracleProviders(HardwareFrom(cmd));
  }
  if (cmd.profile.empty() || cmd.comm.empty()) {
    throw Error(ErrorCode::kUsage, "--profile and --comm must be given together");
  }
  Profile profile = ParseProfile(ReadTextFile(cmd.profile));
  CommModelParams comm = ParseCommParams(ReadTextFile(cmd.comm));
  EstimatorModel model =
      cmd.model.empty()
          ? EstimatorModel::Analytic(cmd.launch_us, cmd.mem_us_per_byte)
          : ParseModel(ReadTextFile(cmd.model));
  return MakeCostProviders(std::move(profile), std::move(model), comm);
}

SearchConfig SearchConfigFrom(const Command& cmd) {
  SearchConfig cfg;
  cfg.alpha = cmd.alpha;
  cfg.beta = cmd.beta;
  cfg.max_unchanged = cmd.max_unchanged;
  cfg.seed = cmd.seed;
  cfg.methods = cmd.methods;
  cfg.time_budget_s = cmd.time_budget_s;
  cfg.jobs = cmd.jobs;
  return cfg;
}

void Emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    WriteTextFile(path, content);
  }
}

struct Snapshot {
  double cost_us = 0.0;
  double fo_bound_us = 0.0;
  ModuleStats stats;
};

Snapshot Measure(const HloGraph& g, const CostProviders& cp) {
  Snapshot s;
  s.cost_us = cost(g, cp);
  s.stats = module_stats(g, cp);
  s.fo_bound_us = std::max(s.stats.total_compute_us, s.stats.total_comm_us);
  return s;
}

std::string SearchReport(const Snapshot& before, const Snapshot& after,
                         const SearchResult& r) {
  std::string out = "metric\tbefore\tafter\n";
  out += fmt::format("cost_us\t{:.6f}\t{:.6f}\n", before.cost_us, after.cost_us);
  out += fmt::format("fo_bound_us\t{:.6f}\t{:.6f}\n", before.fo_bound_us, after.fo_bound_us);
  out += fmt::format("compute_us\t{:.6f}\t{:.6f}\n", before.stats.total_compute_us,
                     after.stats.total_compute_us);
  out += fmt::format("comm_us\t{:.6f}\t{:.6f}\n", before.stats.total_comm_us,
                     after.stats.total_comm_us);
  out += fmt::format("kernels\t{}\t{}\n", before.stats.op_count, after.stats.op_count);
  out += fmt::format("buckets\t{}\t{}\n", before.stats.bucket_count, after.stats.bucket_count);
  out += fmt::format("speedup\t1\t{:.6f}\n", before.cost_us / std::max(after.cost_us, 1e-12));
  out += fmt::format("steps\t{}\n", r.steps);
  out += fmt::format("candidates_evaluated\t{}\n", r.candidates_evaluated);
  out += fmt::format("simulations\t{}\n", r.simulations);
  out += fmt::format("enqueued\t{}\n", r.enqueued);
  return out;
}

int RunGen(const Command& cmd, std::ostream& out) {
  WorkloadSpec spec;
  spec.family = *ParseFamily(cmd.family);
  spec.op_count = cmd.ops;
  spec.tensor_count = cmd.tensors;
  spec.min_tensor_bytes = cmd.min_tensor_bytes;
  spec.max_tensor_bytes = cmd.max_tensor_bytes;
  spec.devices = cmd.devices;
  spec.seed = cmd.seed;
  spec.name = cmd.name;
  const HloGraph g = gen_workload(spec);
  SaveGraph(g, cmd.out);
  out << fmt::format("{}: {} ops, {} edges, {} allreduce tensors\n", g.meta().name,
                     g.ops().size(), g.edges().size(), g.allreduces().size());
  return kExitOk;
}

int RunProfile(const Command& cmd, std::ostream& out) {
  const HloGraph g = LoadGraph(cmd.graph);
  const ProfileBundle b = make_profile(g, HardwareFrom(cmd));
  WriteTextFile(cmd.out_profile, FormatProfile(b.profile));
  WriteTextFile(cmd.out_comm, FormatCommSamples(b.comm_samples));
  out << fmt::format("{} profile entries, {} comm samples\n", b.profile.size(),
                     b.comm_samples.size());
  return kExitOk;
}

int RunFitComm(const Command& cmd, std::ostream& out, std::ostream& err) {
  const CommFit f = fit(ParseCommSamples(ReadTextFile(cmd.samples)));
  if (!f.warning.empty()) err << "warning: " << f.warning << "\n";
  WriteTextFile(cmd.out, FormatCommParams(f.params));
  out << fmt::format("C={} D={}\n", f.params.C, f.params.D);
  return kExitOk;
}

int RunTrain(const Command& cmd, std::ostream& out) {
  std::optional<EstimatorVariant> variant = ParseVariant(cmd.variant);
  if (!variant || *variant == EstimatorVariant::kAnalytic) {
    throw Error(ErrorCode::kUsage, "--variant must be linear or mp");
  }
  std::vector<TrainSample> samples;
  if (!cmd.samples.empty()) {
    samples = ParseTrainSamples(ReadTextFile(cmd.samples));
  } else if (!cmd.graph.empty()) {
    const HloGraph g = LoadGraph(cmd.graph);
    const int64_t max_fusions =
        cmd.max_fusions > 0
            ? cmd.max_fusions
            : std::max<int64_t>(cmd.min_fusions,
                                std::min<int64_t>(50, static_cast<int64_t>(g.ops().size())));
    samples = gen_training_samples(g, cmd.count, cmd.min_fusions, max_fusions,
                                   HardwareFrom(cmd), cmd.seed);
    if (!cmd.samples_out.empty()) WriteTextFile(cmd.samples_out, FormatTrainSamples(samples));
  } else {
    throw Error(ErrorCode::kUsage, "train-est needs --samples or --graph");
  }
  TrainConfig cfg;
  cfg.adam.learning_rate = cmd.learning_rate;
  cfg.batch_size = cmd.batch;
  cfg.epochs = cmd.epochs;
  cfg.seed = cmd.seed;
  cfg.validation_fraction = cmd.validation;
  const TrainResult r = train(samples, cfg, *variant);
  WriteTextFile(cmd.out, SerializeModel(r.model));
  if (!cmd.report.empty()) WriteTextFile(cmd.report, FormatTrainReport(r));
  const EpochReport& best = r.epochs[static_cast<size_t>(r.best_epoch)];
  out << fmt::format("{} samples, best epoch {}, validation loss {:.6g}\n", samples.size(),
                     r.best_epoch, best.validation_loss);
  return kExitOk;
}

int RunSimulate(const Command& cmd, std::ostream& out) {
  const HloGraph g = LoadGraph(cmd.graph);
  const CostProviders cp = ProvidersFrom(cmd);
  const Timeline t = simulate(g, cp);
  if (!cmd.gantt.empty()) WriteTextFile(cmd.gantt, TimelineGanttSvg(t));
  Emit(cmd.out, FormatTimeline(t), out);
  if (!cmd.out.empty() && cmd.out != "-") {
    out << fmt::format("makespan_us {:.6f}\n", t.makespan_us);
  }
  return kExitOk;
}

int RunOptimize(const Command& cmd, std::ostream& out) {
  const HloGraph g = LoadGraph(cmd.graph);
  const CostProviders cp = ProvidersFrom(cmd);
  const SearchResult r = backtracking_search(g, SearchConfigFrom(cmd), cp);
  SaveGraph(r.best, cmd.out);
  if (!cmd.trace.empty()) WriteTextFile(cmd.trace, FormatTrace(r));
  const std::string report = SearchReport(Measure(g, cp), Measure(r.best, cp), r);
  Emit(cmd.report, report, out);
  return kExitOk;
}

int RunExhaustive(const Command& cmd, std::ostream& out) {
  const HloGraph g = LoadGraph(cmd.graph);
  const CostProviders cp = ProvidersFrom(cmd);
  ExhaustiveLimits limits;
  limits.max_ops = static_cast<size_t>(cmd.max_ops);
  limits.max_tensors = static_cast<size_t>(cmd.max_tensors);
  limits.methods = cmd.methods;
  const SearchResult r = exhaustive_search(g, cp, limits);
  SaveGraph(r.best, cmd.out);
  Emit(cmd.report, SearchReport(Measure(g, cp), Measure(r.best, cp), r), out);
  return kExitOk;
}

int RunCompare(const Command& cmd, std::ostream& out) {
  const HloGraph g = LoadGraph(cmd.graph);
  const CostProviders cp = ProvidersFrom(cmd);
  const HloGraph greedy = greedy_postorder_fusion(g);
  const std::vector<std::pair<std::string, HloGraph>> rows = {
      {"no_fusion", g},
      {"greedy_op_fusion", greedy},
      {"threshold_ar_fusion", threshold_allreduce_fusion(g, cmd.threshold_bytes, cp)},
      {"both", threshold_allreduce_fusion(greedy, cmd.threshold_bytes, cp)},
      {"jfuse", backtracking_search(g, SearchConfigFrom(cmd), cp).best},
  };
  const double base = cost(g, cp);
  std::string table =
      "config\tcost_us\tfo_bound_us\tcompute_us\tcomm_us\tkernels\tbuckets\tspeedup\n";
  for (const auto& [name, graph] : rows) {
    const Snapshot s = Measure(graph, cp);
    table += fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\t{}\t{:.6f}\n", name,
                         s.cost_us, s.fo_bound_us, s.stats.total_compute_us,
                         s.stats.total_comm_us, s.stats.op_count, s.stats.bucket_count,
                         base / std::max(s.cost_us, 1e-12));
  }
  Emit(cmd.out, table, out);
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidConfig:
      return kExitUsage;
    case ErrorCode::kInternal:
    case ErrorCode::kDivergence:
      return kExitInternal;
    default:
      return kExitInput;
  }
}

}  // namespace

Command parse_args(int argc, const char* const* argv) {
  Command cmd;
  CLI::App app{"Joint operator fusion and AllReduce tensor fusion optimizer", "jfuse"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", cmd.seed, "Random seed");
  app.add_flag("-v,--verbose", cmd.verbose, "Print progress to stderr");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic training-iteration graph");
  gen->add_option("--family", cmd.family, "chain, residual, attention or recurrent")
      ->check(CLI::IsMember({"chain", "residual", "attention", "recurrent"}));
  gen->add_option("--ops", cmd.ops, "Total op count")->check(CLI::PositiveNumber);
  gen->add_option("--tensors", cmd.tensors, "Gradient tensor count")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--min-tensor-bytes", cmd.min_tensor_bytes)->check(CLI::PositiveNumber);
  gen->add_option("--max-tensor-bytes", cmd.max_tensor_bytes)->check(CLI::PositiveNumber);
  gen->add_option("--devices", cmd.devices, "Data-parallel workers")
      ->check(CLI::PositiveNumber);
  gen->add_option("--name", cmd.name, "Module name");
  gen->add_option("-o,--out", cmd.out, "Output graph file")->required();

  auto* prof = app.add_subcommand("profile", "Profile a graph on the hardware oracle");
  prof->add_option("--graph", cmd.graph, "Graph file")->required();
  prof->add_option("--out-profile", cmd.out_profile, "Output profile file")->required();
  prof->add_option("--out-comm", cmd.out_comm, "Output AllReduce samples file")->required();
  AddHardwareOptions(prof, cmd);

  auto* fitc = app.add_subcommand("fit-comm", "Fit the linear AllReduce model");
  fitc->add_option("--samples", cmd.samples, "AllReduce samples file")->required();
  fitc->add_option("-o,--out", cmd.out, "Output parameter file")->required();

  auto* tr = app.add_subcommand("train-est", "Train the fused-op estimator");
  tr->add_option("--samples", cmd.samples, "Training samples file");
  tr->add_option("--graph", cmd.graph, "Graph to draw training samples from");
  tr->add_option("--samples-out", cmd.samples_out, "Write generated samples here");
  tr->add_option("--variant", cmd.variant, "linear or mp")
      ->check(CLI::IsMember({"linear", "mp"}));
  tr->add_option("--count", cmd.count, "Samples to generate")->check(CLI::PositiveNumber);
  tr->add_option("--min-fusions", cmd.min_fusions)->check(CLI::PositiveNumber);
  tr->add_option("--max-fusions", cmd.max_fusions)->check(CLI::PositiveNumber);
  tr->add_option("--epochs", cmd.epochs)->check(CLI::NonNegativeNumber);
  tr->add_option("--batch", cmd.batch)->check(CLI::PositiveNumber);
  tr->add_option("--lr", cmd.learning_rate)->check(CLI::PositiveNumber);
  tr->add_option("--validation", cmd.validation, "Validation fraction in (0, 1)")
      ->check(CLI::Range(0.0, 1.0));
  tr->add_option("-o,--out", cmd.out, "Output model file")->required();
  tr->add_option("--report", cmd.report, "Per-epoch loss report");
  AddHardwareOptions(tr, cmd);

  auto* sim = app.add_subcommand("simulate", "Simulate one training iteration");
  AddCostOptions(sim, cmd);
  sim->add_option("-o,--out", cmd.out, "Timeline table (default: stdout)");
  sim->add_option("--gantt", cmd.gantt, "Gantt chart (SVG)");

  std::string methods = "nondup,dup,ar";
  double budget = 0.0;
  auto* opt = app.add_subcommand("optimize", "Run the backtracking fusion search");
  AddCostOptions(opt, cmd);
  AddSearchOptions(opt, cmd, methods, budget);
  opt->add_option("-o,--out", cmd.out, "Output strategy (graph with fusion state)")
      ->required();
  opt->add_option("--trace", cmd.trace, "Search trace file");
  opt->add_option("--report", cmd.report, "Before/after report (default: stdout)");

  auto* ex = app.add_subcommand("exhaustive", "Enumerate every reachable fusion state");
  AddCostOptions(ex, cmd);
  ex->add_option("--methods", methods, "Comma-separated subset of nondup,dup,ar");
  ex->add_option("--max-ops", cmd.max_ops)->check(CLI::PositiveNumber);
  ex->add_option("--max-tensors", cmd.max_tensors)->check(CLI::NonNegativeNumber);
  ex->add_option("-o,--out", cmd.out, "Output strategy")->required();
  ex->add_option("--report", cmd.report, "Report (default: stdout)");

  auto* cmp = app.add_subcommand("compare", "Compare against the baseline strategies");
  AddCostOptions(cmp, cmd);
  AddSearchOptions(cmp, cmd, methods, budget);
  cmp->add_option("--threshold-bytes", cmd.threshold_bytes,
                  "Tensor fusion threshold of the baseline")
      ->check(CLI::PositiveNumber);
  cmp->add_option("-o,--out", cmd.out, "Table (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream text;
    app.exit(e, text, text);
    cmd.help = text.str();
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
  cmd.verb = app.get_subcommands().front()->get_name();
  cmd.methods = ParseMethodList(methods);
  if (budget != 0.0) {
    if (!(budget > 0.0)) throw Error(ErrorCode::kUsage, "--time-budget must be positive");
    cmd.time_budget_s = budget;
  }
  if (!(cmd.alpha >= 1.0) || cmd.alpha == std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::kUsage, fmt::format("--alpha must be >= 1, got {}", cmd.alpha));
  }
  if (cmd.beta < 1) throw Error(ErrorCode::kUsage, "--beta must be >= 1");
  if (cmd.max_unchanged < 1) throw Error(ErrorCode::kUsage, "--max-unchanged must be >= 1");
  if (cmd.min_tensor_bytes > cmd.max_tensor_bytes) {
    throw Error(ErrorCode::kUsage, "--min-tensor-bytes exceeds --max-tensor-bytes");
  }
  if (!(cmd.validation > 0.0 && cmd.validation < 1.0)) {
    throw Error(ErrorCode::kUsage, "--validation must be in (0, 1)");
  }
  return cmd;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  if (!cmd.help.empty()) {
    out << cmd.help;
    return kExitOk;
  }
  if (cmd.verbose) err << "jfuse " << cmd.verb << "\n";
  if (cmd.verb == "gen") return RunGen(cmd, out);
  if (cmd.verb == "profile") return RunProfile(cmd, out);
  if (cmd.verb == "fit-comm") return RunFitComm(cmd, out, err);
  if (cmd.verb == "train-est") return RunTrain(cmd, out);
  if (cmd.verb == "simulate") return RunSimulate(cmd, out);
  if (cmd.verb == "optimize") return RunOptimize(cmd, out);
  if (cmd.verb == "exhaustive") return RunExhaustive(cmd, out);
  if (cmd.verb == "compare") return RunCompare(cmd, out);
  throw Error(ErrorCode::kUsage, fmt::format("unknown verb '{}'", cmd.verb));
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(parse_args(argc, argv), out, err);
  } catch (const Error& e) {
    err << "jfuse: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "jfuse: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace jfuse

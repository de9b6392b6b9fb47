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

#ifndef JFUSE_CLI_H_
#define JFUSE_CLI_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jfuse/rewrite.h"

namespace jfuse {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitInternal = 3,
};

// Parsed command line. Only the fields of the selected verb are meaningful.
struct Command {
  std::string verb;  // gen, profile, fit-comm, train-est, simulate, optimize,
                     // exhaustive, compare
  std::string help;  // set when --help was requested
  uint64_t seed = 1;
  bool verbose = false;

  // gen
  std::string family = "chain";
  int64_t ops = 20;
  int64_t tensors = 4;
  int64_t min_tensor_bytes = 4 << 10;
  int64_t max_tensor_bytes = 64 << 20;
  int64_t devices = 8;
  std::string name;

  // hardware oracle
  double launch_us = 5.0;
  double mem_us_per_byte = 1e-4;
  double comm_c = 1e-4;
  double comm_d = 30.0;
  double noise = 0.0;

  // inputs
  std::string graph;
  std::string profile;
  std::string comm;
  std::string model;
  std::string samples;

  // outputs
  std::string out;
  std::string out_profile;
  std::string out_comm;
  std::string samples_out;
  std::string report;
  std::string trace;
  std::string gantt;

  // train-est
  std::string variant = "mp";
  int64_t count = 5000;
  int64_t min_fusions = 1;
  int64_t max_fusions = 0;  // 0: min(50, op count)
  int epochs = 60;
  int batch = 32;
  double learning_rate = 1e-3;
  double validation = 0.1;

  // search
  double alpha = 1.05;
  int beta = 10;
  int64_t max_unchanged = 1000;
  std::vector<OptimizationMethod> methods{std::begin(kAllMethods),
                                          std::end(kAllMethods)};
  std::optional<double> time_budget_s;
  int jobs = 1;
  int64_t max_ops = 8;
  int64_t max_tensors = 4;
  int64_t threshold_bytes = 30 << 20;
};

// Throws Error(kUsage) for unknown verbs or flags, missing required paths and
// out-of-range values.
Command parse_args(int argc, const char* const* argv);

// Executes a parsed command; returns the process exit code.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

// parse_args + run with errors mapped to exit codes.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jfuse

#endif  // JFUSE_CLI_H_

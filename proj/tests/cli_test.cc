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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "jfuse/errors.h"
#include "jfuse/graph_io.h"
#include "jfuse/simulator.h"

namespace jfuse {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "jfuse");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Command Parse(std::vector<std::string> args) {
  args.insert(args.begin(), "jfuse");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

ErrorCode ParseError(std::vector<std::string> args) {
  try {
    Parse(std::move(args));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded";
  return ErrorCode::kInternal;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("jfuse_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::map<std::string, std::vector<std::string>> Table(const std::string& text) {
  std::map<std::string, std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    std::string cell;
    std::getline(fields, key, '\t');
    while (std::getline(fields, cell, '\t')) rows[key].push_back(cell);
  }
  return rows;
}

TEST(ParseArgsTest, OptimizeWithDefaults) {
  const Command c = Parse({"optimize", "--graph", "g", "--profile", "p", "--comm", "c",
                          "--alpha", "1.05", "--beta", "10", "-o", "out"});
  EXPECT_EQ(c.verb, "optimize");
  EXPECT_EQ(c.alpha, 1.05);
  EXPECT_EQ(c.beta, 10);
  EXPECT_EQ(c.max_unchanged, 1000);
  EXPECT_EQ(c.methods.size(), 3u);
  const Command m = Parse({"--seed", "9", "optimize", "--graph", "g", "-o", "o", "--methods",
                           "nondup,ar"});
  EXPECT_EQ(m.seed, 9u);
  EXPECT_EQ(m.methods, (std::vector<OptimizationMethod>{OptimizationMethod::kNonDuplicateFusion,
                                                        OptimizationMethod::kAllReduceFusion}));
}

TEST(ParseArgsTest, UsageErrors) {
  EXPECT_EQ(ParseError({}), ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"frobnicate"}), ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"optimize", "--graph", "g", "-o", "o", "--alpha", "0.5"}),
            ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"optimize", "--graph", "g", "-o", "o", "--beta", "0"}),
            ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"optimize", "--graph", "g"}), ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"simulate", "--graph", "g", "--bogus"}), ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"optimize", "--graph", "g", "-o", "o", "--methods", "nondup,xyz"}),
            ErrorCode::kUsage);
  EXPECT_EQ(ParseError({"gen", "-o", "x", "--family", "mlp"}), ErrorCode::kUsage);
}

TEST(ParseArgsTest, HelpIsNotAnError) {
  const CliResult r = Invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("optimize"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"simulate", "--graph", P("missing.json")}).code, kExitInput);
  WriteTextFile(P("bad.json"), "{\"name\": 3}");
  EXPECT_EQ(Invoke({"simulate", "--graph", P("bad.json")}).code, kExitInput);
  ASSERT_EQ(Invoke({"gen", "--ops", "6", "--tensors", "2", "-o", P("g.json")}).code, 0);
  // A profile without a comm model is a usage error.
  EXPECT_EQ(Invoke({"simulate", "--graph", P("g.json"), "--profile", P("p.json")}).code,
            kExitUsage);
  EXPECT_EQ(Invoke({"exhaustive", "--graph", P("g.json"), "--max-ops", "3", "-o", P("e.json")}).code,
            kExitInput);
}

TEST_F(CliTest, EmptyGraphSimulatesToZero) {
  SaveGraph(HloGraph(), P("empty.json"));
  const CliResult r = Invoke({"simulate", "--graph", P("empty.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("makespan_us\t0.000000"), std::string::npos);
}

TEST_F(CliTest, FullPipeline) {
  ASSERT_EQ(Invoke({"--seed", "3", "gen", "--family", "attention", "--ops", "40", "--tensors",
                 "8", "-o", P("g.json")})
                .code,
            0);
  ASSERT_EQ(Invoke({"profile", "--graph", P("g.json"), "--out-profile", P("p.json"),
                 "--out-comm", P("c.txt")})
                .code,
            0);
  CliResult fit = Invoke({"fit-comm", "--samples", P("c.txt"), "-o", P("comm.json")});
  ASSERT_EQ(fit.code, 0) << fit.err;
  EXPECT_NE(fit.out.find("C="), std::string::npos);
  CliResult train = Invoke({"train-est", "--graph", P("g.json"), "--variant", "linear", "--count",
                         "300", "--epochs", "5", "-o", P("m.json"), "--report", P("r.txt"),
                         "--samples-out", P("s.jsonl")});
  ASSERT_EQ(train.code, 0) << train.err;
  ASSERT_TRUE(fs::exists(P("r.txt")));
  ASSERT_EQ(Invoke({"train-est", "--samples", P("s.jsonl"), "--variant", "mp", "--epochs", "1",
                 "-o", P("m2.json")})
                .code,
            0);

  const std::vector<std::string> cost = {"--graph", P("g.json"), "--profile", P("p.json"),
                                         "--comm", P("comm.json"), "--model", P("m.json")};
  std::vector<std::string> sim = {"simulate", "-o", P("t.tsv"), "--gantt", P("t.svg")};
  sim.insert(sim.end(), cost.begin(), cost.end());
  const CliResult s = Invoke(sim);
  ASSERT_EQ(s.code, 0) << s.err;
  const std::string timeline = ReadTextFile(P("t.tsv"));
  const auto tl = Table(timeline);
  ASSERT_TRUE(tl.count("makespan_us"));
  EXPECT_NE(ReadTextFile(P("t.svg")).find("<svg"), std::string::npos);

  std::vector<std::string> opt = {"optimize", "-o", P("best.json"), "--trace",
                                  P("trace.tsv"), "--report", P("rep.tsv"),
                                  "--max-unchanged", "100"};
  opt.insert(opt.end(), cost.begin(), cost.end());
  const CliResult o = Invoke(opt);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rep = Table(ReadTextFile(P("rep.tsv")));
  ASSERT_EQ(rep.at("cost_us").size(), 2u);
  EXPECT_LE(std::stod(rep.at("cost_us")[1]), std::stod(rep.at("cost_us")[0]));
  EXPECT_EQ(rep.at("cost_us")[0], tl.at("makespan_us")[0]);
  EXPECT_TRUE(validate_module(LoadGraph(P("best.json"))).ok);

  std::vector<std::string> cmp = {"compare", "-o", P("cmp.tsv"), "--max-unchanged", "100"};
  cmp.insert(cmp.end(), cost.begin(), cost.end());
  ASSERT_EQ(Invoke(cmp).code, 0);
  const auto table = Table(ReadTextFile(P("cmp.tsv")));
  for (const char* row : {"no_fusion", "greedy_op_fusion", "threshold_ar_fusion", "both",
                          "jfuse"}) {
    ASSERT_TRUE(table.count(row)) << row;
  }
  EXPECT_EQ(table.at("no_fusion")[0], tl.at("makespan_us")[0]);
  EXPECT_LE(std::stod(table.at("jfuse")[0]), std::stod(table.at("no_fusion")[0]));
}

TEST_F(CliTest, MethodMasksAreReported) {
  ASSERT_EQ(Invoke({"gen", "--family", "residual", "--ops", "30", "--tensors", "10", "-o",
                 P("g.json")})
                .code,
            0);
  for (const char* mask : {"nondup", "nondup,dup", "nondup,dup,ar"}) {
    const CliResult r = Invoke({"optimize", "--graph", P("g.json"), "-o", P("best.json"),
                                "--methods", mask, "--max-unchanged", "150"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = Table(r.out);
    const double before = std::stod(rep.at("cost_us")[0]);
    const double after = std::stod(rep.at("cost_us")[1]);
    EXPECT_GT(after, 0) << mask;
    EXPECT_LE(after, before) << mask;
  }
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  auto pipeline = [&](const std::string& tag) {
    auto f = [&](const std::string& n) { return P(tag + n); };
    EXPECT_EQ(Invoke({"--seed", "5", "gen", "--family", "residual", "--ops", "24", "--tensors",
                   "6", "-o", f("g.json")})
                  .code,
              0);
    EXPECT_EQ(Invoke({"--seed", "5", "profile", "--graph", f("g.json"), "--out-profile",
                   f("p.json"), "--out-comm", f("c.txt"), "--noise", "0.05"})
                  .code,
              0);
    EXPECT_EQ(Invoke({"fit-comm", "--samples", f("c.txt"), "-o", f("comm.json")}).code, 0);
    EXPECT_EQ(Invoke({"--seed", "5", "train-est", "--graph", f("g.json"), "--count", "200",
                   "--epochs", "2", "-o", f("m.json"), "--report", f("r.txt"),
                   "--samples-out", f("s.jsonl")})
                  .code,
              0);
    const std::vector<std::string> cost = {"--graph", f("g.json"), "--profile", f("p.json"),
                                           "--comm", f("comm.json"), "--model", f("m.json")};
    auto with = [&](std::vector<std::string> v) {
      v.insert(v.end(), cost.begin(), cost.end());
      return v;
    };
    EXPECT_EQ(Invoke(with({"simulate", "-o", f("t.tsv"), "--gantt", f("t.svg")})).code, 0);
    EXPECT_EQ(Invoke(with({"--seed", "5", "optimize", "-o", f("best.json"), "--trace",
                        f("trace.tsv"), "--report", f("rep.tsv"), "--max-unchanged", "50",
                        "--jobs", tag == "a_" ? "1" : "2"}))
                  .code,
              0);
    EXPECT_EQ(Invoke(with({"compare", "-o", f("cmp.tsv"), "--max-unchanged", "50"})).code, 0);
  };
  pipeline("a_");
  pipeline("b_");
  for (const char* n : {"g.json", "p.json", "c.txt", "comm.json", "m.json", "r.txt", "s.jsonl",
                        "t.tsv", "t.svg", "best.json", "trace.tsv", "rep.tsv", "cmp.tsv"}) {
    EXPECT_EQ(ReadTextFile(P(std::string("a_") + n)), ReadTextFile(P(std::string("b_") + n)))
        << n;
  }
}

TEST_F(CliTest, BinaryExitStatus) {
  auto status = [](const std::string& args) {
    const int raw = std::system((std::string(JFUSE_CLI_PATH) + " " + args +
                                 " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status(""), 1);
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("simulate --graph " + P("nope.json")), 2);
  EXPECT_EQ(status("gen --ops 5 --tensors 1 -o " + P("g.json")), 0);
  EXPECT_EQ(status("simulate --graph " + P("g.json")), 0);
}

}  // namespace
}  // namespace jfuse

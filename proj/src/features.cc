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
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "jfuse/errors.h"
#include "jfuse/estimator.h"
#include "jfuse/graph_io.h"
#include "json.hpp"

namespace jfuse {

using nlohmann::json;
using nlohmann::ordered_json;

void Profile::Set(const std::string& op_code, const std::string& shape_key,
                  double us) {
  if (!(us > 0.0) || !std::isfinite(us)) {
    throw Error(ErrorCode::kInvalidCost,
                fmt::format("profile time for ({}, {}) must be positive, got {}",
                            op_code, shape_key, us));
  }
  entries_[{op_code, shape_key}] = us;
}

std::optional<double> Profile::Find(const std::string& op_code,
                                    const std::string& shape_key) const {
  auto it = entries_.find({op_code, shape_key});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double lookup(const Profile& p, const OpNode& op) {
  std::optional<double> us = p.Find(op.op_code, op.input_shape_key);
  if (!us) {
    throw Error(ErrorCode::kUnknownOp,
                fmt::format("no profile entry for op {} ({}, {})", op.id,
                            op.op_code, op.input_shape_key));
  }
  return *us;
}

Profile ParseProfile(const std::string& text) {
  const json doc = ParseJsonText(text, "profile");
  if (!doc.is_object() || doc.size() != 1 || !doc.contains("entries") ||
      !doc["entries"].is_array()) {
    throw Error(ErrorCode::kInput, "profile must be {\"entries\": [...]}");
  }
  Profile p;
  for (const json& e : doc["entries"]) {
    if (!e.is_object() || e.size() != 3 || !e.contains("op_code") ||
        !e.contains("shape") || !e.contains("us") || !e["op_code"].is_string() ||
        !e["shape"].is_string() || !e["us"].is_number()) {
      throw Error(ErrorCode::kInput,
                  "profile entry must be {\"op_code\", \"shape\", \"us\"}");
    }
    try {
      p.Set(e["op_code"].get<std::string>(), e["shape"].get<std::string>(),
            e["us"].get<double>());
    } catch (const Error& err) {
      throw Error(ErrorCode::kInput, err.what());
    }
  }
  return p;
}

std::string FormatProfile(const Profile& p) {
  ordered_json doc;
  doc["entries"] = ordered_json::array();
  for (const auto& [key, us] : p.entries()) {
    ordered_json e;
    e["op_code"] = key.first;
    e["shape"] = key.second;
    e["us"] = us;
    doc["entries"].push_back(std::move(e));
  }
  return doc.dump(1) + "\n";
}

double SubgraphFeatures::SumCompute() const {
  double s = 0.0;
  for (const NodeFeatures& n : nodes) s += n.compute_us;
  return s;
}

double SubgraphFeatures::InternalBytes() const {
  double s = 0.0;
  for (const MemberEdge& e : edges) s += e.bytes;
  return s;
}

int SubgraphFeatures::LongestPath() const {
  const size_t n = nodes.size();
  if (n == 0) return 0;
  std::vector<std::vector<int>> out(n);
  std::vector<int> indeg(n, 0);
  for (const MemberEdge& e : edges) {
    out[static_cast<size_t>(e.src)].push_back(e.dst);
    ++indeg[static_cast<size_t>(e.dst)];
  }
  std::vector<int> depth(n, 1);
  std::vector<int> stack;
  for (size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) stack.push_back(static_cast<int>(i));
  }
  int best = 1;
  size_t seen = 0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    ++seen;
    best = std::max(best, depth[static_cast<size_t>(u)]);
    for (int v : out[static_cast<size_t>(u)]) {
      depth[static_cast<size_t>(v)] =
          std::max(depth[static_cast<size_t>(v)], depth[static_cast<size_t>(u)] + 1);
      if (--indeg[static_cast<size_t>(v)] == 0) stack.push_back(v);
    }
  }
  if (seen != n) throw Error(ErrorCode::kCycle, "member edges contain a cycle");
  return best;
}

std::array<double, kAggregateDim> SubgraphFeatures::Aggregates() const {
  return {static_cast<double>(nodes.size()), SumCompute(),    InternalBytes(),
          external_in_bytes,                 external_out_bytes,
          static_cast<double>(LongestPath())};
}

namespace {

std::vector<size_t> MemberIndices(const HloGraph& g, const FusionGroup& group) {
  std::vector<size_t> idx;
  idx.reserve(group.member_ops.size());
  for (OpId op : group.member_ops) {
    std::optional<size_t> i = g.topology().OpIndex(op);
    if (!i) {
      throw Error(ErrorCode::kInvalidGraph,
                  fmt::format("group {} names unknown op {}", group.id, op));
    }
    idx.push_back(*i);
  }
  return idx;
}

int LocateGroup(const HloGraph& g, const FusionGroup& group) {
  std::optional<size_t> gi = g.GroupIndex(group.id);
  if (!gi || g.groups()[*gi].member_ops != group.member_ops ||
      g.groups()[*gi].duplicated_ops != group.duplicated_ops) {
    throw Error(ErrorCode::kInvalidGraph,
                fmt::format("group {} is not part of the graph's fusion state",
                            group.id));
  }
  return static_cast<int>(*gi);
}

}  // namespace

double OpInBytes(const HloGraph& g, size_t op_index) {
  double s = 0.0;
  for (size_t e : g.topology().in_edges(op_index)) {
    s += static_cast<double>(g.edges()[e].bytes);
  }
  return s;
}

double GroupExternalInBytes(const HloGraph& g, const FusionGroup& group) {
  const GraphTopology& topo = g.topology();
  double s = 0.0;
  for (size_t v : MemberIndices(g, group)) {
    for (size_t e : topo.in_edges(v)) {
      if (!group.Contains(g.edges()[e].src)) {
        s += static_cast<double>(g.edges()[e].bytes);
      }
    }
  }
  return s;
}

double GroupExternalOutBytes(const HloGraph& g, const FusionGroup& group) {
  const GraphTopology& topo = g.topology();
  const Contraction& c = g.contraction();
  const int gi = LocateGroup(g, group);
  double s = 0.0;
  for (size_t u : MemberIndices(g, group)) {
    if (c.provider[u] != gi) continue;
    bool writes = !topo.produced_allreduces(u).empty() || topo.out_edges(u).empty();
    for (size_t e : topo.out_edges(u)) {
      if (!group.Contains(g.edges()[e].dst)) writes = true;
    }
    if (writes) s += static_cast<double>(g.ops()[u].out_bytes);
  }
  return s;
}

SubgraphFeatures FeaturizeWith(const HloGraph& g, const FusionGroup& group,
                               const std::function<double(const OpNode&)>& op_time) {
  const GraphTopology& topo = g.topology();
  const std::vector<size_t> members = MemberIndices(g, group);
  std::unordered_map<OpId, int> local;
  SubgraphFeatures f;
  f.nodes.reserve(members.size());
  for (size_t k = 0; k < members.size(); ++k) {
    const OpNode& op = g.ops()[members[k]];
    local[op.id] = static_cast<int>(k);
    f.nodes.push_back(NodeFeatures{op.op_code, op_time(op), OpInBytes(g, members[k]),
                                   static_cast<double>(op.out_bytes)});
  }
  for (size_t k = 0; k < members.size(); ++k) {
    for (size_t e : topo.in_edges(members[k])) {
      const DataEdge& edge = g.edges()[e];
      auto it = local.find(edge.src);
      if (it == local.end()) continue;
      f.edges.push_back(MemberEdge{it->second, static_cast<int>(k),
                                   static_cast<double>(edge.bytes)});
    }
  }
  f.external_in_bytes = GroupExternalInBytes(g, group);
  f.external_out_bytes = GroupExternalOutBytes(g, group);
  return f;
}

SubgraphFeatures featurize(const HloGraph& g, const FusionGroup& group,
                           const Profile& p) {
  return FeaturizeWith(g, group, [&p](const OpNode& op) { return lookup(p, op); });
}

namespace {

ordered_json SampleToJson(const TrainSample& s) {
  ordered_json j;
  j["nodes"] = ordered_json::array();
  for (const NodeFeatures& n : s.features.nodes) {
    j["nodes"].push_back(ordered_json::array(
        {n.op_code, n.compute_us, n.in_bytes, n.out_bytes}));
  }
  j["edges"] = ordered_json::array();
  for (const MemberEdge& e : s.features.edges) {
    j["edges"].push_back(ordered_json::array({e.src, e.dst, e.bytes}));
  }
  j["ext_in_bytes"] = s.features.external_in_bytes;
  j["ext_out_bytes"] = s.features.external_out_bytes;
  j["actual_us"] = s.actual_us;
  return j;
}

TrainSample SampleFromJson(const json& j, int line_no) {
  auto fail = [line_no](const std::string& what) {
    return Error(ErrorCode::kInput, fmt::format("sample line {}: {}", line_no, what));
  };
  if (!j.is_object() || j.size() != 5 || !j.contains("nodes") || !j.contains("edges") ||
      !j.contains("ext_in_bytes") || !j.contains("ext_out_bytes") ||
      !j.contains("actual_us")) {
    throw fail("expected keys nodes, edges, ext_in_bytes, ext_out_bytes, actual_us");
  }
  TrainSample s;
  if (!j["nodes"].is_array() || j["nodes"].empty()) throw fail("nodes must be a non-empty array");
  for (const json& n : j["nodes"]) {
    if (!n.is_array() || n.size() != 4 || !n[0].is_string() || !n[1].is_number() ||
        !n[2].is_number() || !n[3].is_number()) {
      throw fail("node must be [op_code, compute_us, in_bytes, out_bytes]");
    }
    s.features.nodes.push_back(NodeFeatures{n[0].get<std::string>(), n[1].get<double>(),
                                            n[2].get<double>(), n[3].get<double>()});
    if (!(s.features.nodes.back().compute_us > 0.0)) throw fail("compute_us must be positive");
  }
  const int count = static_cast<int>(s.features.nodes.size());
  if (!j["edges"].is_array()) throw fail("edges must be an array");
  for (const json& e : j["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number()) {
      throw fail("edge must be [src, dst, bytes]");
    }
    MemberEdge me{e[0].get<int>(), e[1].get<int>(), e[2].get<double>()};
    if (me.src < 0 || me.src >= count || me.dst < 0 || me.dst >= count || me.src == me.dst) {
      throw fail("edge endpoint out of range");
    }
    s.features.edges.push_back(me);
  }
  if (!j["ext_in_bytes"].is_number() || !j["ext_out_bytes"].is_number() ||
      !j["actual_us"].is_number()) {
    throw fail("byte counts and label must be numbers");
  }
  s.features.external_in_bytes = j["ext_in_bytes"].get<double>();
  s.features.external_out_bytes = j["ext_out_bytes"].get<double>();
  s.actual_us = j["actual_us"].get<double>();
  if (!(s.actual_us > 0.0)) throw fail("actual_us must be positive");
  return s;
}

}  // namespace

std::string FormatTrainSamples(const std::vector<TrainSample>& samples) {
  std::string out;
  for (const TrainSample& s : samples) {
    out += SampleToJson(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainSample> ParseTrainSamples(const std::string& text) {
  std::vector<TrainSample> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInput, fmt::format("sample line {}: {}", line_no, e.what()));
    }
    out.push_back(SampleFromJson(j, line_no));
  }
  return out;
}

}  // namespace jfuse

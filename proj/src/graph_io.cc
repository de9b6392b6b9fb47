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

#include "jfuse/graph_io.h"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "jfuse/errors.h"

namespace jfuse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void Bad(const std::string& msg) {
  throw Error(ErrorCode::kInput, msg);
}

void RequireObject(const json& j, std::string_view where,
                   std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional) {
  if (!j.is_object()) Bad(fmt::format("{} must be an object", where));
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto k : required) known |= (it.key() == k);
    for (auto k : optional) known |= (it.key() == k);
    if (!known) Bad(fmt::format("unknown key '{}' in {}", it.key(), where));
  }
  for (auto k : required) {
    if (!j.contains(std::string(k))) {
      Bad(fmt::format("missing key '{}' in {}", k, where));
    }
  }
}

int64_t GetInt(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    Bad(fmt::format("'{}' in {} must be an integer", key, where));
  }
  return v.get<int64_t>();
}

double GetNumber(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number()) Bad(fmt::format("'{}' in {} must be a number", key, where));
  return v.get<double>();
}

std::string GetString(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_string()) Bad(fmt::format("'{}' in {} must be a string", key, where));
  return v.get<std::string>();
}

std::vector<int64_t> GetIntArray(const json& j, const char* key,
                                 std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_array()) Bad(fmt::format("'{}' in {} must be an array", key, where));
  std::vector<int64_t> out;
  for (const json& x : v) {
    if (!x.is_number_integer()) {
      Bad(fmt::format("'{}' in {} must hold integers", key, where));
    }
    out.push_back(x.get<int64_t>());
  }
  return out;
}

const json& GetArray(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) Bad(fmt::format("'{}' must be an array", key));
  return v;
}

}  // namespace

HloGraph GraphFromJson(const json& doc) {
  RequireObject(doc, "graph", {"meta", "ops", "edges", "allreduce"},
                {"groups", "buckets"});
  const json& jm = doc.at("meta");
  RequireObject(jm, "meta", {"name", "devices", "seed"}, {});
  ModuleMeta meta;
  meta.name = GetString(jm, "name", "meta");
  meta.devices = GetInt(jm, "devices", "meta");
  if (!jm.at("seed").is_number_unsigned() && !jm.at("seed").is_number_integer()) {
    Bad("'seed' in meta must be an integer");
  }
  meta.seed = jm.at("seed").get<uint64_t>();

  std::vector<OpNode> ops;
  for (const json& jo : GetArray(doc, "ops")) {
    RequireObject(jo, "op",
                  {"id", "op_code", "kind", "input_shape_key", "out_bytes"},
                  {"compute_us"});
    OpNode op;
    op.id = GetInt(jo, "id", "op");
    op.op_code = GetString(jo, "op_code", "op");
    auto kind = ParseOpKind(GetString(jo, "kind", "op"));
    if (!kind) Bad(fmt::format("op {} has unknown kind", op.id));
    op.kind = *kind;
    op.input_shape_key = GetString(jo, "input_shape_key", "op");
    op.out_bytes = GetInt(jo, "out_bytes", "op");
    if (jo.contains("compute_us")) op.compute_us = GetNumber(jo, "compute_us", "op");
    ops.push_back(std::move(op));
  }

  std::vector<DataEdge> edges;
  for (const json& je : GetArray(doc, "edges")) {
    RequireObject(je, "edge", {"src", "dst", "bytes"}, {});
    edges.push_back(DataEdge{GetInt(je, "src", "edge"), GetInt(je, "dst", "edge"),
                             GetInt(je, "bytes", "edge")});
  }

  std::vector<AllReduceInstr> allreduces;
  for (const json& ja : GetArray(doc, "allreduce")) {
    RequireObject(ja, "allreduce", {"id", "producer_op", "tensor_bytes"},
                  {"consumers"});
    AllReduceInstr ar;
    ar.id = GetInt(ja, "id", "allreduce");
    ar.producer_op = GetInt(ja, "producer_op", "allreduce");
    ar.tensor_bytes = GetInt(ja, "tensor_bytes", "allreduce");
    if (ja.contains("consumers")) ar.consumers = GetIntArray(ja, "consumers", "allreduce");
    allreduces.push_back(std::move(ar));
  }

  auto topo = std::make_shared<const GraphTopology>(
      std::move(meta), std::move(ops), std::move(edges), std::move(allreduces));
  HloGraph unfused = HloGraph::Unfused(topo);

  std::vector<FusionGroup> groups = unfused.groups();
  if (doc.contains("groups")) {
    groups.clear();
    for (const json& jg : GetArray(doc, "groups")) {
      RequireObject(jg, "group", {"id", "members"}, {"duplicated"});
      FusionGroup group;
      group.id = GetInt(jg, "id", "group");
      group.member_ops = GetIntArray(jg, "members", "group");
      if (jg.contains("duplicated")) {
        group.duplicated_ops = GetIntArray(jg, "duplicated", "group");
      }
      groups.push_back(std::move(group));
    }
  }

  std::vector<TensorBucket> buckets = unfused.buckets();
  if (doc.contains("buckets")) {
    buckets.clear();
    for (const json& jb : GetArray(doc, "buckets")) {
      RequireObject(jb, "bucket", {"id", "members"}, {"total_bytes"});
      TensorBucket bucket;
      bucket.id = GetInt(jb, "id", "bucket");
      bucket.members = GetIntArray(jb, "members", "bucket");
      if (jb.contains("total_bytes")) {
        bucket.total_bytes = GetInt(jb, "total_bytes", "bucket");
      } else {
        for (AllReduceId ar : bucket.members) {
          if (auto idx = topo->AllReduceIndex(ar)) {
            bucket.total_bytes += topo->allreduces()[*idx].tensor_bytes;
          }
        }
      }
      buckets.push_back(std::move(bucket));
    }
  }
  return HloGraph(topo, std::move(groups), std::move(buckets));
}

ordered_json GraphToJson(const HloGraph& g) {
  ordered_json doc;
  doc["meta"] = {{"name", g.meta().name},
                 {"devices", g.meta().devices},
                 {"seed", g.meta().seed}};
  ordered_json ops = ordered_json::array();
  for (const OpNode& op : g.ops()) {
    ordered_json jo;
    jo["id"] = op.id;
    jo["op_code"] = op.op_code;
    jo["kind"] = std::string(OpKindName(op.kind));
    jo["input_shape_key"] = op.input_shape_key;
    jo["out_bytes"] = op.out_bytes;
    if (op.compute_us) jo["compute_us"] = *op.compute_us;
    ops.push_back(std::move(jo));
  }
  doc["ops"] = std::move(ops);
  ordered_json edges = ordered_json::array();
  for (const DataEdge& e : g.edges()) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
  }
  doc["edges"] = std::move(edges);
  ordered_json ars = ordered_json::array();
  for (const AllReduceInstr& ar : g.allreduces()) {
    ordered_json ja;
    ja["id"] = ar.id;
    ja["producer_op"] = ar.producer_op;
    ja["tensor_bytes"] = ar.tensor_bytes;
    if (!ar.consumers.empty()) ja["consumers"] = ar.consumers;
    ars.push_back(std::move(ja));
  }
  doc["allreduce"] = std::move(ars);
  ordered_json groups = ordered_json::array();
  for (const FusionGroup& group : g.groups()) {
    ordered_json jg;
    jg["id"] = group.id;
    jg["members"] = group.member_ops;
    if (!group.duplicated_ops.empty()) jg["duplicated"] = group.duplicated_ops;
    groups.push_back(std::move(jg));
  }
  doc["groups"] = std::move(groups);
  ordered_json buckets = ordered_json::array();
  for (const TensorBucket& bucket : g.buckets()) {
    buckets.push_back({{"id", bucket.id},
                       {"members", bucket.members},
                       {"total_bytes", bucket.total_bytes}});
  }
  doc["buckets"] = std::move(buckets);
  return doc;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Bad(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Bad(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) Bad(fmt::format("failed writing '{}'", path));
}

json ParseJsonText(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Bad(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

HloGraph LoadGraph(const std::string& path) {
  return GraphFromJson(ParseJsonText(ReadTextFile(path), path));
}

void SaveGraph(const HloGraph& g, const std::string& path) {
  WriteTextFile(path, GraphToJson(g).dump(1) + "\n");
}

}  // namespace jfuse

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

#ifndef JFUSE_GRAPH_IO_H_
#define JFUSE_GRAPH_IO_H_

#include <string>

#include "jfuse/graph_ir.h"
#include "json.hpp"

namespace jfuse {

// Graph documents:
//   {"meta": {"name", "devices", "seed"},
//    "ops": [{"id", "op_code", "kind", "input_shape_key", "out_bytes",
//             "compute_us"?}],
//    "edges": [{"src", "dst", "bytes"}],
//    "allreduce": [{"id", "producer_op", "tensor_bytes", "consumers"?}],
//    "groups"?: [{"id", "members", "duplicated"?}],
//    "buckets"?: [{"id", "members", "total_bytes"?}]}
// Unknown keys are rejected at every level. Missing groups/buckets mean the
// unfused state.
HloGraph GraphFromJson(const nlohmann::json& doc);
nlohmann::ordered_json GraphToJson(const HloGraph& g);

HloGraph LoadGraph(const std::string& path);
void SaveGraph(const HloGraph& g, const std::string& path);

// Whole-file helpers; both throw Error(kInput) on I/O failure.
std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& content);

nlohmann::json ParseJsonText(const std::string& text, const std::string& what);

}  // namespace jfuse

#endif  // JFUSE_GRAPH_IO_H_

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

#include "jfuse/workloads.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "jfuse/errors.h"
#include "jfuse/hashing.h"
#include "jfuse/random.h"

namespace jfuse {

HardwareParams HardwareParams::Default() {
  HardwareParams hw;
  hw.us_per_element = {
      {"Conv2D", 4e-3},    {"MatMul", 2e-3},    {"BatchMatMul", 2e-3},
      {"Embedding", 1e-4}, {"Add", 1e-4},       {"Mul", 1e-4},
      {"Relu", 8e-5},      {"Sigmoid", 2e-4},   {"Tanh", 2e-4},
      {"Softmax", 4e-4},   {"LayerNorm", 3e-4}, {"BatchNorm", 3e-4},
  };
  hw.fixed_compute_us = {{"ApplyGradient", 1.0}};
  return hw;
}

double OpComputeUs(const OpNode& op, const HardwareParams& hw) {
  if (op.kind != OpKind::kCompute) return 0.0;
  auto fixed = hw.fixed_compute_us.find(op.op_code);
  if (fixed != hw.fixed_compute_us.end()) return fixed->second;
  std::string_view code = op.op_code;
  constexpr std::string_view kGrad = "Grad";
  if (code.size() > kGrad.size() && code.ends_with(kGrad)) {
    code.remove_suffix(kGrad.size());
  }
  auto rate = hw.us_per_element.find(std::string(code));
  const double per_element =
      rate != hw.us_per_element.end() ? rate->second : hw.default_us_per_element;
  return per_element * static_cast<double>(op.out_bytes) / 4.0;
}

namespace {

double Jitter(double value, uint64_t key, const HardwareParams& hw) {
  if (hw.noise <= 0.0) return value;
  const uint64_t bits = Mix64(HashCombine(hw.seed, key));
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return value * (1.0 + hw.noise * (2.0 * u - 1.0));
}

}  // namespace

double oracle_time(const HloGraph& g, const FusionGroup& group,
                   const HardwareParams& hw) {
  const GraphTopology& topo = g.topology();
  const Contraction& c = g.contraction();
  std::optional<size_t> gi = g.GroupIndex(group.id);
  if (!gi || g.groups()[*gi].member_ops != group.member_ops ||
      g.groups()[*gi].duplicated_ops != group.duplicated_ops) {
    throw Error(ErrorCode::kInvalidGraph,
                fmt::format("group {} is not part of the fusion state", group.id));
  }
  std::unordered_set<OpId> members(group.member_ops.begin(), group.member_ops.end());
  double compute = 0.0;
  double bytes_in = 0.0;
  double bytes_out = 0.0;
  std::vector<uint64_t> signature;
  for (OpId id : group.member_ops) {
    const size_t u = *topo.OpIndex(id);
    const OpNode& op = g.ops()[u];
    compute += OpComputeUs(op, hw);
    for (size_t e : topo.in_edges(u)) {
      const DataEdge& edge = g.edges()[e];
      if (members.count(edge.src) == 0) bytes_in += static_cast<double>(edge.bytes);
    }
    if (c.provider[u] == static_cast<int>(*gi)) {
      bool leaves = topo.out_edges(u).empty() || !topo.produced_allreduces(u).empty();
      for (size_t e : topo.out_edges(u)) {
        if (members.count(g.edges()[e].dst) == 0) leaves = true;
      }
      if (leaves) bytes_out += static_cast<double>(op.out_bytes);
    }
    signature.push_back(HashCombine(
        HashString(op.op_code),
        HashCombine(HashString(op.input_shape_key), group.IsReplica(id) ? 1 : 0)));
  }
  const double t = compute + hw.launch_overhead_us + hw.mem_us_per_byte * (bytes_in + bytes_out);
  std::sort(signature.begin(), signature.end());
  uint64_t key = 0x6f7261636c65ULL;
  for (uint64_t s : signature) key = HashCombine(key, s);
  key = HashCombine(key, std::bit_cast<uint64_t>(bytes_in));
  key = HashCombine(key, std::bit_cast<uint64_t>(bytes_out));
  return Jitter(t, key, hw);
}

CostProviders MakeOracleProviders(const HardwareParams& hw) {
  CostProviders cp;
  cp.op_cost = [hw](const HloGraph& g, const FusionGroup& group) {
    return oracle_time(g, group, hw);
  };
  cp.comm_cost = [hw](const HloGraph&, const TensorBucket& bucket) {
    return predict(hw.comm, static_cast<double>(bucket.total_bytes));
  };
  return cp;
}

std::string_view FamilyName(WorkloadFamily f) {
  switch (f) {
    case WorkloadFamily::kChain:
      return "chain";
    case WorkloadFamily::kResidual:
      return "residual";
    case WorkloadFamily::kAttention:
      return "attention";
    case WorkloadFamily::kRecurrent:
      return "recurrent";
  }
  return "unknown";
}

std::optional<WorkloadFamily> ParseFamily(std::string_view name) {
  if (name == "chain") return WorkloadFamily::kChain;
  if (name == "residual") return WorkloadFamily::kResidual;
  if (name == "attention") return WorkloadFamily::kAttention;
  if (name == "recurrent") return WorkloadFamily::kRecurrent;
  return std::nullopt;
}

namespace {

struct ProtoOp {
  std::string op_code;
  std::vector<int> preds;  // indices of earlier forward ops
};

class ForwardBuilder {
 public:
  int Add(std::string op_code, std::vector<int> preds) {
    ops_.push_back(ProtoOp{std::move(op_code), std::move(preds)});
    return static_cast<int>(ops_.size()) - 1;
  }
  size_t size() const { return ops_.size(); }
  std::vector<ProtoOp> Take(size_t n) {
    ops_.resize(n);
    return std::move(ops_);
  }

 private:
  std::vector<ProtoOp> ops_;
};

std::vector<ProtoOp> ForwardOps(WorkloadFamily family, size_t n) {
  ForwardBuilder b;
  if (n == 0) return {};
  switch (family) {
    case WorkloadFamily::kChain: {
      static const char* kCodes[] = {"Conv2D", "BatchNorm", "Relu"};
      for (size_t i = 0; i < n; ++i) {
        std::vector<int> preds;
        if (i > 0) preds.push_back(static_cast<int>(i) - 1);
        b.Add(kCodes[i % 3], preds);
      }
      break;
    }
    case WorkloadFamily::kResidual: {
      int x = b.Add("Conv2D", {});
      while (b.size() < n) {
        const int c1 = b.Add("Conv2D", {x});
        const int n1 = b.Add("BatchNorm", {c1});
        const int r1 = b.Add("Relu", {n1});
        const int c2 = b.Add("Conv2D", {r1});
        const int n2 = b.Add("BatchNorm", {c2});
        const int add = b.Add("Add", {n2, x});
        x = b.Add("Relu", {add});
      }
      break;
    }
    case WorkloadFamily::kAttention: {
      int x = b.Add("Embedding", {});
      while (b.size() < n) {
        const int q = b.Add("MatMul", {x});
        const int k = b.Add("MatMul", {x});
        const int v = b.Add("MatMul", {x});
        const int s = b.Add("BatchMatMul", {q, k});
        const int p = b.Add("Softmax", {s});
        const int o = b.Add("BatchMatMul", {p, v});
        const int proj = b.Add("MatMul", {o});
        const int r = b.Add("Add", {proj, x});
        const int ln = b.Add("LayerNorm", {r});
        const int f1 = b.Add("MatMul", {ln});
        const int f2 = b.Add("Relu", {f1});
        const int f3 = b.Add("MatMul", {f2});
        const int r2 = b.Add("Add", {f3, ln});
        x = b.Add("LayerNorm", {r2});
      }
      break;
    }
    case WorkloadFamily::kRecurrent: {
      const int e = b.Add("Embedding", {});
      int h = e;
      while (b.size() < n) {
        const int xp = b.Add("MatMul", {e});
        const int hp = b.Add("MatMul", {h});
        const int a = b.Add("Add", {xp, hp});
        h = b.Add("Tanh", {a});
      }
      break;
    }
  }
  return b.Take(n);
}

int64_t DrawBytes(Rng& rng, int64_t lo, int64_t hi) {
  const double v = LogUniform(rng, static_cast<double>(lo), static_cast<double>(hi));
  return std::max<int64_t>(4, static_cast<int64_t>(std::llround(v / 4.0)) * 4);
}

}  // namespace

HloGraph gen_workload(const WorkloadSpec& spec) {
  if (spec.op_count < 1 || spec.tensor_count < 0) {
    throw Error(ErrorCode::kInvalidConfig, "need op_count >= 1 and tensor_count >= 0");
  }
  if (spec.min_tensor_bytes < 4 || spec.min_tensor_bytes > spec.max_tensor_bytes ||
      spec.min_activation_bytes < 4 ||
      spec.min_activation_bytes > spec.max_activation_bytes) {
    throw Error(ErrorCode::kInvalidConfig, "invalid byte ranges");
  }
  if (spec.devices < 1) throw Error(ErrorCode::kInvalidConfig, "devices must be >= 1");
  const int64_t n = spec.op_count;
  const int64_t t = spec.tensor_count;
  int64_t params = 0;
  int64_t rest = n;
  if (t > 0) {
    params = n - 2 * t >= 2 ? t : 0;
    rest = n - t - params;
    if (rest < 2) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("{} ops cannot hold {} gradient tensors", n, t));
    }
  }
  const int64_t fwd = (rest + 1) / 2;
  const int64_t bwd = rest - fwd;

  Rng rng(HashCombine(spec.seed, 0x776f726b6c6f6164ULL));
  const std::vector<ProtoOp> proto = ForwardOps(spec.family, static_cast<size_t>(fwd));

  std::vector<OpNode> ops;
  std::vector<DataEdge> edges;
  std::vector<AllReduceInstr> ars;
  const OpId first_fwd = params;
  const OpId first_bwd = first_fwd + fwd;
  const OpId first_update = first_bwd + bwd;
  auto fwd_id = [&](int64_t i) { return first_fwd + i; };
  // Backward op j mirrors forward op fwd - 1 - j.
  auto has_mirror = [&](int64_t i) { return i >= fwd - bwd; };
  auto bwd_id = [&](int64_t i) { return first_bwd + (fwd - 1 - i); };

  std::vector<int64_t> tensor_bytes(static_cast<size_t>(t));
  for (int64_t k = 0; k < t; ++k) {
    tensor_bytes[static_cast<size_t>(k)] =
        DrawBytes(rng, spec.min_tensor_bytes, spec.max_tensor_bytes);
  }
  std::vector<int64_t> act_bytes(static_cast<size_t>(fwd));
  for (int64_t i = 0; i < fwd; ++i) {
    act_bytes[static_cast<size_t>(i)] =
        DrawBytes(rng, spec.min_activation_bytes, spec.max_activation_bytes);
  }

  for (int64_t k = 0; k < params; ++k) {
    ops.push_back(OpNode{k, "Parameter", OpKind::kParameter, "", 0, std::nullopt});
  }
  for (int64_t i = 0; i < fwd; ++i) {
    ops.push_back(OpNode{fwd_id(i), proto[static_cast<size_t>(i)].op_code,
                         OpKind::kCompute, "", act_bytes[static_cast<size_t>(i)],
                         std::nullopt});
  }
  for (int64_t j = 0; j < bwd; ++j) {
    const int64_t i = fwd - 1 - j;
    ops.push_back(OpNode{first_bwd + j, proto[static_cast<size_t>(i)].op_code + "Grad",
                         OpKind::kCompute, "", act_bytes[static_cast<size_t>(i)],
                         std::nullopt});
  }
  for (int64_t k = 0; k < t; ++k) {
    ops.push_back(OpNode{first_update + k, "ApplyGradient", OpKind::kCompute, "", 4,
                         std::nullopt});
  }

  for (int64_t v = 0; v < fwd; ++v) {
    for (int u : proto[static_cast<size_t>(v)].preds) {
      edges.push_back(DataEdge{fwd_id(u), fwd_id(v), act_bytes[static_cast<size_t>(u)]});
      if (has_mirror(u) && has_mirror(v)) {
        edges.push_back(
            DataEdge{bwd_id(v), bwd_id(u), act_bytes[static_cast<size_t>(v)]});
      }
    }
    if (has_mirror(v)) {
      edges.push_back(DataEdge{fwd_id(v), bwd_id(v), act_bytes[static_cast<size_t>(v)]});
    }
  }
  for (int64_t k = 0; k < t; ++k) {
    const int64_t j = k * bwd / t;
    const OpId producer = first_bwd + j;
    const OpId update = first_update + k;
    ars.push_back(AllReduceInstr{k, producer, tensor_bytes[static_cast<size_t>(k)], {update}});
    if (params > 0) {
      edges.push_back(DataEdge{k, fwd_id(fwd - 1 - j), 0});
      edges.push_back(DataEdge{k, update, 0});
    }
  }

  std::vector<int64_t> in_bytes(static_cast<size_t>(n), 0);
  for (const DataEdge& e : edges) in_bytes[static_cast<size_t>(e.dst)] += e.bytes;
  for (OpNode& op : ops) {
    op.input_shape_key =
        fmt::format("{}->{}", in_bytes[static_cast<size_t>(op.id)], op.out_bytes);
  }

  ModuleMeta meta;
  meta.name = spec.name.empty()
                  ? fmt::format("{}-{}-{}", FamilyName(spec.family), n, spec.seed)
                  : spec.name;
  meta.devices = spec.devices;
  meta.seed = spec.seed;
  auto topo = std::make_shared<const GraphTopology>(std::move(meta), std::move(ops),
                                                    std::move(edges), std::move(ars));
  return HloGraph::Unfused(std::move(topo));
}

ProfileBundle make_profile(const HloGraph& g, const HardwareParams& hw) {
  const HloGraph base = HloGraph::Unfused(g.topology_ptr());
  ProfileBundle out;
  for (const FusionGroup& group : base.groups()) {
    const OpNode& op = g.ops()[*g.topology().OpIndex(group.member_ops.front())];
    const double us = oracle_time(base, group, hw);
    std::optional<double> prev = out.profile.Find(op.op_code, op.input_shape_key);
    if (prev && *prev != us) {
      throw Error(ErrorCode::kInternal,
                  fmt::format("ops sharing key ({}, {}) disagree", op.op_code,
                              op.input_shape_key));
    }
    out.profile.Set(op.op_code, op.input_shape_key, us);
  }
  std::vector<double> sizes;
  for (const AllReduceInstr& ar : g.allreduces()) {
    sizes.push_back(static_cast<double>(ar.tensor_bytes));
  }
  for (double b = 4096.0; b <= 64.0 * 1024 * 1024; b *= 4.0) sizes.push_back(b);
  for (size_t i = 0; i < sizes.size(); ++i) {
    const double exact = predict(hw.comm, sizes[i]);
    const uint64_t key = HashCombine(0x636f6d6dULL + i, std::bit_cast<uint64_t>(sizes[i]));
    out.comm_samples.push_back(CommSample{sizes[i], Jitter(exact, key, hw)});
  }
  return out;
}

namespace {

// Op-level successors including AllReduce producer -> consumer dependencies.
std::vector<std::vector<size_t>> DependencySuccessors(const HloGraph& g) {
  const GraphTopology& topo = g.topology();
  std::vector<std::vector<size_t>> succ(g.ops().size());
  for (size_t u = 0; u < g.ops().size(); ++u) {
    for (size_t e : topo.out_edges(u)) succ[u].push_back(*topo.OpIndex(g.edges()[e].dst));
    for (size_t a : topo.produced_allreduces(u)) {
      for (OpId c : g.allreduces()[a].consumers) succ[u].push_back(*topo.OpIndex(c));
    }
  }
  return succ;
}

// True when no dependency path leaves `members` and re-enters it.
bool IsConvex(const std::vector<std::vector<size_t>>& succ,
              const std::vector<char>& in_set, const std::vector<size_t>& members,
              std::vector<char>& visited) {
  std::fill(visited.begin(), visited.end(), 0);
  std::vector<size_t> stack;
  for (size_t m : members) {
    for (size_t s : succ[m]) {
      if (!in_set[s] && !visited[s]) {
        visited[s] = 1;
        stack.push_back(s);
      }
    }
  }
  while (!stack.empty()) {
    const size_t u = stack.back();
    stack.pop_back();
    for (size_t s : succ[u]) {
      if (in_set[s]) return false;
      if (!visited[s]) {
        visited[s] = 1;
        stack.push_back(s);
      }
    }
  }
  return true;
}

}  // namespace

std::vector<TrainSample> gen_training_samples(const HloGraph& g, int64_t count,
                                              int64_t min_fusions,
                                              int64_t max_fusions,
                                              const HardwareParams& hw,
                                              uint64_t seed) {
  if (count < 1 || min_fusions < 1 || min_fusions > max_fusions) {
    throw Error(ErrorCode::kInvalidConfig,
                "need count >= 1 and 1 <= min_fusions <= max_fusions");
  }
  const GraphTopology& topo = g.topology();
  const HloGraph base = HloGraph::Unfused(g.topology_ptr());
  const Profile profile = make_profile(base, hw).profile;
  const size_t n = g.ops().size();
  const auto succ = DependencySuccessors(g);

  std::vector<size_t> starts;
  for (size_t v = 0; v < n; ++v) {
    if (g.ops()[v].kind != OpKind::kCompute) continue;
    for (size_t e : topo.in_edges(v)) {
      if (g.ops()[*topo.OpIndex(g.edges()[e].src)].kind == OpKind::kCompute) {
        starts.push_back(v);
        break;
      }
    }
  }
  if (starts.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "graph has no fusible op pairs");
  }

  Rng rng(HashCombine(seed, 0x73616d706c6573ULL));
  std::vector<char> in_set(n, 0);
  std::vector<char> visited(n, 0);
  std::vector<TrainSample> out;
  out.reserve(static_cast<size_t>(count));
  while (static_cast<int64_t>(out.size()) < count) {
    const size_t start = starts[UniformIndex(rng, starts.size())];
    const int64_t draws = UniformInt(rng, min_fusions, max_fusions);
    std::vector<size_t> members{start};
    in_set[start] = 1;
    for (int64_t d = 0; d < draws; ++d) {
      std::vector<size_t> preds;
      for (size_t m : members) {
        for (size_t e : topo.in_edges(m)) {
          const size_t u = *topo.OpIndex(g.edges()[e].src);
          if (!in_set[u] && g.ops()[u].kind == OpKind::kCompute) preds.push_back(u);
        }
      }
      std::sort(preds.begin(), preds.end());
      preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
      if (preds.empty()) break;
      const size_t u = preds[UniformIndex(rng, preds.size())];
      in_set[u] = 1;
      members.push_back(u);
      if (!IsConvex(succ, in_set, members, visited)) {
        in_set[u] = 0;
        members.pop_back();
      }
    }
    for (size_t m : members) in_set[m] = 0;
    if (members.size() < 2) continue;

    FusionGroup fused;
    fused.id = g.ops()[start].id;
    for (size_t m : members) fused.member_ops.push_back(g.ops()[m].id);
    std::sort(fused.member_ops.begin(), fused.member_ops.end());
    std::vector<FusionGroup> groups{fused};
    for (const FusionGroup& single : base.groups()) {
      if (!std::binary_search(fused.member_ops.begin(), fused.member_ops.end(),
                              single.member_ops.front())) {
        groups.push_back(single);
      }
    }
    const HloGraph state = base.WithState(std::move(groups), base.buckets());
    out.push_back(TrainSample{featurize(state, state.groups().front(), profile),
                              oracle_time(state, state.groups().front(), hw)});
  }
  return out;
}

}  // namespace jfuse

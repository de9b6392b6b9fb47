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

#ifndef JFUSE_ESTIMATOR_H_
#define JFUSE_ESTIMATOR_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jfuse/graph_ir.h"

namespace jfuse {

// Measured single-op times keyed by (op_code, input_shape_key).
class Profile {
 public:
  void Set(const std::string& op_code, const std::string& shape_key, double us);
  std::optional<double> Find(const std::string& op_code,
                             const std::string& shape_key) const;
  const std::map<std::pair<std::string, std::string>, double>& entries() const {
    return entries_;
  }
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> entries_;
};

// Throws Error(kUnknownOp) when the op's key is absent.
double lookup(const Profile& p, const OpNode& op);

// {"entries": [{"op_code", "shape", "us"}, ...]}
Profile ParseProfile(const std::string& text);
std::string FormatProfile(const Profile& p);

struct NodeFeatures {
  std::string op_code;
  double compute_us = 0.0;  // profiled stand-alone time
  double in_bytes = 0.0;    // all bytes read by the op
  double out_bytes = 0.0;   // bytes the op writes when run stand-alone
};

struct MemberEdge {
  int src = 0;  // indices into SubgraphFeatures::nodes
  int dst = 0;
  double bytes = 0.0;
};

inline constexpr size_t kAggregateDim = 6;

struct SubgraphFeatures {
  std::vector<NodeFeatures> nodes;
  std::vector<MemberEdge> edges;
  double external_in_bytes = 0.0;
  double external_out_bytes = 0.0;

  // [member count, sum compute_us, internal bytes, external in bytes,
  //  external out bytes, longest path in nodes]
  std::array<double, kAggregateDim> Aggregates() const;
  double SumCompute() const;
  double InternalBytes() const;
  int LongestPath() const;
};

// Bytes a group writes back to memory: outputs of members it publishes
// (it is their provider) that feed an AllReduce, an op outside the group, or
// nothing at all (graph outputs). Shared by featurize and the hardware oracle.
double GroupExternalInBytes(const HloGraph& g, const FusionGroup& group);
double GroupExternalOutBytes(const HloGraph& g, const FusionGroup& group);
// Bytes an op reads and writes when run on its own.
double OpInBytes(const HloGraph& g, size_t op_index);

// Member time comes from `op_time`; duplicated members count as full members.
SubgraphFeatures FeaturizeWith(const HloGraph& g, const FusionGroup& group,
                               const std::function<double(const OpNode&)>& op_time);

// Throws Error(kUnknownOp) when a member is missing from the profile.
SubgraphFeatures featurize(const HloGraph& g, const FusionGroup& group,
                           const Profile& p);

enum class EstimatorVariant { kAnalytic, kLinearFeatures, kMessagePassing };

std::string_view VariantName(EstimatorVariant v);  // "analytic", "linear", "mp"
std::optional<EstimatorVariant> ParseVariant(std::string_view name);

struct MpShape {
  int layers = 6;
  int hidden = 32;
  int dense_layers = 3;
  int dense_width = 32;
};

inline constexpr size_t kNodeNumericDim = 3;

// Normalization of the log-transformed inputs, fitted on training data.
struct FeatureScaling {
  std::array<double, kNodeNumericDim> node_mean{};
  std::array<double, kNodeNumericDim> node_std{1.0, 1.0, 1.0};
  std::array<double, kAggregateDim> agg_mean{};
  std::array<double, kAggregateDim> agg_std{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
};

struct EstimatorModel {
  EstimatorVariant variant = EstimatorVariant::kAnalytic;
  double launch_overhead_us = 5.0;
  double mem_us_per_byte = 1e-4;
  std::vector<std::string> vocabulary;  // one-hot slots; one extra for "other"
  MpShape shape;
  FeatureScaling scaling;
  std::vector<double> params;

  static EstimatorModel Analytic(double launch_overhead_us, double mem_us_per_byte);
  static EstimatorModel LinearFeatures();
  // He-initialized weights, zero biases.
  static EstimatorModel MessagePassing(std::vector<std::string> vocabulary,
                                       const MpShape& shape, uint64_t seed);

  size_t ExpectedParamCount() const;
  size_t NodeInputDim() const { return kNodeNumericDim + vocabulary.size() + 1; }
};

// Strictly positive. Throws Error(kDimensionMismatch) when the parameter
// vector does not match the configured shape.
double predict_fused(const EstimatorModel& m, const SubgraphFeatures& f);

// (ln pred - ln actual)^2. Throws Error(kNonPositiveTime).
double loss(double pred, double actual);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
};

// In-place Adam update with bias correction. An empty state is sized on first
// use. Throws Error(kDimensionMismatch).
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& cfg);

struct TrainSample {
  SubgraphFeatures features;
  double actual_us = 0.0;
};

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 32;
  int epochs = 60;
  uint64_t seed = 1;
  double validation_fraction = 0.1;
  MpShape shape;
};

struct EpochReport {
  int epoch = 0;  // 0 is the initial model
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  EstimatorModel model;
  std::vector<EpochReport> epochs;
  int best_epoch = 0;
};

// Trains the LinearFeatures or MessagePassing variant and returns the
// parameters with the lowest validation loss. Throws Error(kInvalidConfig),
// Error(kNonPositiveTime), Error(kDivergence).
TrainResult train(const std::vector<TrainSample>& samples, const TrainConfig& cfg,
                  EstimatorVariant variant);

std::string FormatTrainReport(const TrainResult& r);

// Inputs of one sample after vocabulary lookup and normalization.
struct PreparedSample {
  int num_nodes = 0;
  int input_dim = 0;
  std::vector<double> x;                  // num_nodes x input_dim
  std::vector<std::vector<int>> closed;   // undirected neighbors plus self
  std::array<double, kAggregateDim> phi{};
  double sum_compute = 0.0;
};

PreparedSample Prepare(const EstimatorModel& m, const SubgraphFeatures& f);

// Loss of one sample; adds d loss / d params into `grad` when non-null.
double SampleLossAndGrad(const EstimatorModel& m, const PreparedSample& s,
                         double actual_us, std::vector<double>* grad);

// Versioned JSON document with decimal parameters.
std::string SerializeModel(const EstimatorModel& m);
EstimatorModel ParseModel(const std::string& text);

// One JSON object per line.
std::string FormatTrainSamples(const std::vector<TrainSample>& samples);
std::vector<TrainSample> ParseTrainSamples(const std::string& text);

}  // namespace jfuse

#endif  // JFUSE_ESTIMATOR_H_

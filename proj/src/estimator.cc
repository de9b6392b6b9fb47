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

#include "jfuse/estimator.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "jfuse/errors.h"
#include "jfuse/estimator_kernels.h"
#include "jfuse/graph_io.h"
#include "jfuse/random.h"
#include "json.hpp"

namespace jfuse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kKiB = 1024.0;
constexpr double kMinPrediction = 1e-6;
constexpr int kModelVersion = 1;

std::array<double, kNodeNumericDim> RawNodeNumeric(const NodeFeatures& n) {
  return {std::log1p(n.compute_us), std::log1p(n.in_bytes / kKiB),
          std::log1p(n.out_bytes / kKiB)};
}

std::array<double, kAggregateDim> RawAggregates(const SubgraphFeatures& f) {
  const std::array<double, kAggregateDim> a = f.Aggregates();
  return {std::log(a[0]),         std::log1p(a[1]),        std::log1p(a[2] / kKiB),
          std::log1p(a[3] / kKiB), std::log1p(a[4] / kKiB), std::log(a[5])};
}

void CheckParamCount(const EstimatorModel& m) {
  if (m.params.size() != m.ExpectedParamCount()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} model expects {} parameters, has {}",
                            VariantName(m.variant), m.ExpectedParamCount(),
                            m.params.size()));
  }
}

}  // namespace

std::string_view VariantName(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::kAnalytic:
      return "analytic";
    case EstimatorVariant::kLinearFeatures:
      return "linear";
    case EstimatorVariant::kMessagePassing:
      return "mp";
  }
  return "unknown";
}

std::optional<EstimatorVariant> ParseVariant(std::string_view name) {
  if (name == "analytic") return EstimatorVariant::kAnalytic;
  if (name == "linear") return EstimatorVariant::kLinearFeatures;
  if (name == "mp") return EstimatorVariant::kMessagePassing;
  return std::nullopt;
}

EstimatorModel EstimatorModel::Analytic(double launch_overhead_us,
                                        double mem_us_per_byte) {
  EstimatorModel m;
  m.variant = EstimatorVariant::kAnalytic;
  m.launch_overhead_us = launch_overhead_us;
  m.mem_us_per_byte = mem_us_per_byte;
  return m;
}

EstimatorModel EstimatorModel::LinearFeatures() {
  EstimatorModel m;
  m.variant = EstimatorVariant::kLinearFeatures;
  m.params.assign(kLinearParamCount, 0.0);
  return m;
}

EstimatorModel EstimatorModel::MessagePassing(std::vector<std::string> vocabulary,
                                              const MpShape& shape, uint64_t seed) {
  if (shape.layers < 0 || shape.hidden < 1 || shape.dense_layers < 0 ||
      shape.dense_width < 1) {
    throw Error(ErrorCode::kInvalidConfig, "invalid message-passing shape");
  }
  EstimatorModel m;
  m.variant = EstimatorVariant::kMessagePassing;
  m.vocabulary = std::move(vocabulary);
  m.shape = shape;
  const MpLayout lay = MpLayout::For(m);
  m.params.assign(lay.total, 0.0);
  Rng rng(seed);
  auto init = [&](size_t offset, size_t rows, size_t cols, double gain) {
    const double scale = std::sqrt(gain / static_cast<double>(cols));
    for (size_t i = 0; i < rows * cols; ++i) {
      m.params[offset + i] = scale * StandardNormal(rng);
    }
  };
  init(lay.w0, lay.hidden, lay.input_dim, 1.0);
  for (size_t l = 0; l < lay.layers; ++l) init(lay.w[l], lay.hidden, lay.hidden, 2.0);
  init(lay.readout, lay.hidden, lay.hidden, 2.0);
  for (size_t k = 0; k < lay.dense_layers; ++k) {
    init(lay.dense_w[k], lay.dense_width, lay.DenseIn(k), 2.0);
  }
  init(lay.out_w, 1, lay.HeadWidth(), 0.01);
  // softplus(b) = 1: an untrained model predicts the unfused sum.
  m.params[lay.out_b] = std::log(std::exp(1.0) - 1.0);
  return m;
}

size_t EstimatorModel::ExpectedParamCount() const {
  switch (variant) {
    case EstimatorVariant::kAnalytic:
      return 0;
    case EstimatorVariant::kLinearFeatures:
      return kLinearParamCount;
    case EstimatorVariant::kMessagePassing:
      return MpLayout::For(*this).total;
  }
  return 0;
}

PreparedSample Prepare(const EstimatorModel& m, const SubgraphFeatures& f) {
  if (f.nodes.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "subgraph has no member ops");
  }
  PreparedSample s;
  s.num_nodes = static_cast<int>(f.nodes.size());
  s.sum_compute = f.SumCompute();
  const std::array<double, kAggregateDim> raw = RawAggregates(f);
  for (size_t a = 0; a < kAggregateDim; ++a) {
    s.phi[a] = (raw[a] - m.scaling.agg_mean[a]) / m.scaling.agg_std[a];
  }
  if (m.variant != EstimatorVariant::kMessagePassing) return s;

  const size_t n = f.nodes.size();
  const size_t d = m.NodeInputDim();
  s.input_dim = static_cast<int>(d);
  s.x.assign(n * d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const std::array<double, kNodeNumericDim> num = RawNodeNumeric(f.nodes[i]);
    double* x = &s.x[i * d];
    for (size_t k = 0; k < kNodeNumericDim; ++k) {
      x[k] = (num[k] - m.scaling.node_mean[k]) / m.scaling.node_std[k];
    }
    size_t slot = m.vocabulary.size();
    for (size_t v = 0; v < m.vocabulary.size(); ++v) {
      if (m.vocabulary[v] == f.nodes[i].op_code) {
        slot = v;
        break;
      }
    }
    x[kNodeNumericDim + slot] = 1.0;
  }
  s.closed.assign(n, {});
  for (size_t i = 0; i < n; ++i) s.closed[i].push_back(static_cast<int>(i));
  for (const MemberEdge& e : f.edges) {
    s.closed[static_cast<size_t>(e.src)].push_back(e.dst);
    s.closed[static_cast<size_t>(e.dst)].push_back(e.src);
  }
  for (std::vector<int>& nb : s.closed) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return s;
}

double predict_fused(const EstimatorModel& m, const SubgraphFeatures& f) {
  if (f.nodes.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "subgraph has no member ops");
  }
  if (m.variant == EstimatorVariant::kAnalytic) {
    if (f.nodes.size() == 1) return std::max(f.nodes[0].compute_us, kMinPrediction);
    double t = m.launch_overhead_us +
               m.mem_us_per_byte * (f.external_in_bytes + f.external_out_bytes);
    for (const NodeFeatures& n : f.nodes) {
      t += n.compute_us - m.launch_overhead_us -
           m.mem_us_per_byte * (n.in_bytes + n.out_bytes);
    }
    return std::max(t, kMinPrediction);
  }
  CheckParamCount(m);
  const PreparedSample s = Prepare(m, f);
  const double log_pred =
      m.variant == EstimatorVariant::kLinearFeatures
          ? LinearLogPredict(m.params.data(), s)
          : MpLogPredict<double>(MpLayout::For(m), m.params.data(), s, nullptr);
  return std::max(std::exp(log_pred), kMinPrediction);
}

double loss(double pred, double actual) {
  if (!(pred > 0.0) || !(actual > 0.0)) {
    throw Error(ErrorCode::kNonPositiveTime,
                fmt::format("loss needs positive times, got pred={} actual={}", pred,
                            actual));
  }
  const double r = std::log(pred) - std::log(actual);
  return r * r;
}

namespace {

// d ln(softplus(z)) / dz
double DLogSoftplus(double z) {
  if (z < -30.0) {
    const double e = 0.5 * std::exp(z);
    return 1.0 - e / (1.0 - e);
  }
  const double sig = 1.0 / (1.0 + std::exp(-z));
  return sig / Softplus(z);
}

void MpBackward(const MpLayout& lay, const double* p, const PreparedSample& s,
                const MpTape<double>& t, double g_log_pred, double* gp) {
  const size_t n = static_cast<size_t>(s.num_nodes);
  const size_t hd = lay.hidden;
  const double gz = g_log_pred * DLogSoftplus(t.z);

  gp[lay.out_b] += gz;
  std::vector<double> gu(lay.HeadWidth());
  for (size_t c = 0; c < gu.size(); ++c) {
    gp[lay.out_w + c] += gz * t.head[c];
    gu[c] = gz * p[lay.out_w + c];
  }
  for (size_t k = lay.dense_layers; k-- > 0;) {
    const size_t in_dim = lay.DenseIn(k);
    const std::vector<double>& in = t.dense_in[k];
    const std::vector<double>& pre = t.dense_pre[k];
    std::vector<double> gin(in_dim, 0.0);
    for (size_t r = 0; r < lay.dense_width; ++r) {
      if (!(pre[r] > 0.0) || gu[r] == 0.0) continue;
      const double ga = gu[r];
      gp[lay.dense_b[k] + r] += ga;
      const size_t row = lay.dense_w[k] + r * in_dim;
      for (size_t c = 0; c < in_dim; ++c) {
        gp[row + c] += ga * in[c];
        gin[c] += ga * p[row + c];
      }
    }
    gu = std::move(gin);
  }

  std::vector<double> gs(hd, 0.0);
  for (size_t r = 0; r < hd; ++r) {
    if (!(t.readout_pre[r] > 0.0) || gu[r] == 0.0) continue;
    const double gr = gu[r];
    const size_t row = lay.readout + r * hd;
    for (size_t c = 0; c < hd; ++c) {
      gp[row + c] += gr * t.pooled[c];
      gs[c] += gr * p[row + c];
    }
  }
  std::vector<double> gh(n * hd);
  for (size_t i = 0; i < n; ++i) std::copy(gs.begin(), gs.end(), gh.begin() + i * hd);

  std::vector<double> gm(n * hd);
  for (size_t l = lay.layers; l-- > 0;) {
    const std::vector<double>& pre = t.pre[l];
    const std::vector<double>& agg = t.agg[l];
    std::fill(gm.begin(), gm.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t r = 0; r < hd; ++r) {
        const double g = gh[i * hd + r];
        if (!(pre[i * hd + r] > 0.0) || g == 0.0) continue;
        const size_t row = lay.w[l] + r * hd;
        const double* a = &agg[i * hd];
        double* gmi = &gm[i * hd];
        for (size_t c = 0; c < hd; ++c) {
          gp[row + c] += g * a[c];
          gmi[c] += g * p[row + c];
        }
      }
    }
    std::fill(gh.begin(), gh.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double inv = 1.0 / static_cast<double>(s.closed[i].size());
      for (int j : s.closed[i]) {
        double* ghj = &gh[static_cast<size_t>(j) * hd];
        const double* gmi = &gm[i * hd];
        for (size_t c = 0; c < hd; ++c) ghj[c] += gmi[c] * inv;
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const double* x = &s.x[i * lay.input_dim];
    for (size_t r = 0; r < hd; ++r) {
      const double g = gh[i * hd + r];
      if (g == 0.0) continue;
      const size_t row = lay.w0 + r * lay.input_dim;
      for (size_t c = 0; c < lay.input_dim; ++c) {
        if (x[c] != 0.0) gp[row + c] += g * x[c];
      }
    }
  }
}

double LossAndGrad(const EstimatorModel& m, const MpLayout* lay,
                   const PreparedSample& s, double actual_us, double* gp,
                   MpTape<double>* tape) {
  if (!(actual_us > 0.0)) {
    throw Error(ErrorCode::kNonPositiveTime,
                fmt::format("label must be positive, got {}", actual_us));
  }
  const double* p = m.params.data();
  if (m.variant == EstimatorVariant::kLinearFeatures) {
    const double r = LinearLogPredict(p, s) - std::log(actual_us);
    if (gp != nullptr) {
      for (size_t a = 0; a < kAggregateDim; ++a) gp[a] += 2.0 * r * s.phi[a];
      gp[kAggregateDim] += 2.0 * r;
    }
    return r * r;
  }
  const double r = MpLogPredict<double>(*lay, p, s, tape) - std::log(actual_us);
  if (gp != nullptr) MpBackward(*lay, p, s, *tape, 2.0 * r, gp);
  return r * r;
}

}  // namespace

double SampleLossAndGrad(const EstimatorModel& m, const PreparedSample& s,
                         double actual_us, std::vector<double>* grad) {
  if (m.variant == EstimatorVariant::kAnalytic) {
    throw Error(ErrorCode::kInvalidConfig, "the analytic variant has no parameters");
  }
  CheckParamCount(m);
  if (grad != nullptr && grad->size() != m.params.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("gradient buffer sized {} for {} parameters",
                            grad->size(), m.params.size()));
  }
  MpLayout lay;
  if (m.variant == EstimatorVariant::kMessagePassing) lay = MpLayout::For(m);
  MpTape<double> tape;
  return LossAndGrad(m, &lay, s, actual_us, grad != nullptr ? grad->data() : nullptr,
                     &tape);
}

namespace {

void ValidateTrainConfig(const TrainConfig& cfg) {
  const AdamConfig& a = cfg.adam;
  if (!(a.learning_rate > 0.0) || !(a.beta1 > 0.0 && a.beta1 < 1.0) ||
      !(a.beta2 > 0.0 && a.beta2 < 1.0) || !(a.epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "need learning rate > 0, betas in (0, 1) and epsilon > 0");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 0) {
    throw Error(ErrorCode::kInvalidConfig, "need batch size >= 1 and epochs >= 0");
  }
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "validation fraction must be in (0, 1)");
  }
}

template <size_t N>
void FitScaling(const std::vector<std::array<double, N>>& rows,
                std::array<double, N>& mean, std::array<double, N>& stddev) {
  mean.fill(0.0);
  stddev.fill(1.0);
  if (rows.empty()) return;
  const double count = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (size_t k = 0; k < N; ++k) mean[k] += r[k];
  }
  for (size_t k = 0; k < N; ++k) mean[k] /= count;
  std::array<double, N> var{};
  for (const auto& r : rows) {
    for (size_t k = 0; k < N; ++k) var[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
  }
  for (size_t k = 0; k < N; ++k) {
    const double sd = std::sqrt(var[k] / count);
    stddev[k] = sd > 1e-9 ? sd : 1.0;
  }
}

}  // namespace

TrainResult train(const std::vector<TrainSample>& samples, const TrainConfig& cfg,
                  EstimatorVariant variant) {
  if (variant == EstimatorVariant::kAnalytic) {
    throw Error(ErrorCode::kInvalidConfig,
                "the analytic variant is configured, not trained");
  }
  ValidateTrainConfig(cfg);
  if (samples.size() < static_cast<size_t>(cfg.batch_size) || samples.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("{} samples is fewer than the batch size {}",
                            samples.size(), cfg.batch_size));
  }
  for (const TrainSample& s : samples) {
    if (!(s.actual_us > 0.0)) {
      throw Error(ErrorCode::kNonPositiveTime,
                  fmt::format("label must be positive, got {}", s.actual_us));
    }
  }

  Rng rng(cfg.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Shuffle(order, rng);
  size_t n_val = static_cast<size_t>(
      std::llround(cfg.validation_fraction * static_cast<double>(samples.size())));
  n_val = std::clamp<size_t>(n_val, 1, samples.size() - 1);
  std::vector<size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<size_t> trn(order.begin() + static_cast<long>(n_val), order.end());

  EstimatorModel model;
  if (variant == EstimatorVariant::kLinearFeatures) {
    model = EstimatorModel::LinearFeatures();
  } else {
    std::vector<std::string> vocab;
    for (const TrainSample& s : samples) {
      for (const NodeFeatures& n : s.features.nodes) vocab.push_back(n.op_code);
    }
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    model = EstimatorModel::MessagePassing(std::move(vocab), cfg.shape, cfg.seed);
  }
  {
    std::vector<std::array<double, kNodeNumericDim>> node_rows;
    std::vector<std::array<double, kAggregateDim>> agg_rows;
    for (size_t i : trn) {
      const SubgraphFeatures& f = samples[i].features;
      agg_rows.push_back(RawAggregates(f));
      for (const NodeFeatures& n : f.nodes) node_rows.push_back(RawNodeNumeric(n));
    }
    FitScaling(node_rows, model.scaling.node_mean, model.scaling.node_std);
    FitScaling(agg_rows, model.scaling.agg_mean, model.scaling.agg_std);
  }

  std::vector<PreparedSample> prepared;
  prepared.reserve(samples.size());
  for (const TrainSample& s : samples) prepared.push_back(Prepare(model, s.features));

  MpLayout lay;
  if (variant == EstimatorVariant::kMessagePassing) lay = MpLayout::For(model);
  MpTape<double> tape;
  auto mean_loss = [&](const std::vector<size_t>& idx) {
    double total = 0.0;
    for (size_t i : idx) {
      total += LossAndGrad(model, &lay, prepared[i], samples[i].actual_us, nullptr, &tape);
    }
    return total / static_cast<double>(idx.size());
  };

  TrainResult result;
  result.epochs.push_back(EpochReport{0, mean_loss(trn), mean_loss(val)});
  if (!std::isfinite(result.epochs[0].validation_loss)) {
    throw Error(ErrorCode::kDivergence, "initial validation loss is not finite");
  }
  std::vector<double> best_params = model.params;
  double best_val = result.epochs[0].validation_loss;

  AdamState adam;
  std::vector<double> grad(model.params.size());
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Shuffle(trn, rng);
    double train_total = 0.0;
    for (size_t start = 0; start < trn.size(); start += batch) {
      const size_t end = std::min(trn.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t k = start; k < end; ++k) {
        const size_t i = trn[k];
        train_total += LossAndGrad(model, &lay, prepared[i], samples[i].actual_us,
                                   grad.data(), &tape);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      adam_step(model.params, grad, adam, cfg.adam);
    }
    EpochReport rep{epoch, train_total / static_cast<double>(trn.size()), mean_loss(val)};
    result.epochs.push_back(rep);
    if (!std::isfinite(rep.validation_loss) || !std::isfinite(rep.train_loss)) {
      throw Error(ErrorCode::kDivergence,
                  fmt::format("loss became non-finite at epoch {}", epoch));
    }
    if (rep.validation_loss < best_val) {
      best_val = rep.validation_loss;
      best_params = model.params;
      result.best_epoch = epoch;
    }
  }
  model.params = std::move(best_params);
  result.model = std::move(model);
  return result;
}

std::string FormatTrainReport(const TrainResult& r) {
  std::string out = "epoch\ttrain_loss\tvalidation_loss\n";
  for (const EpochReport& e : r.epochs) {
    out += fmt::format("{}\t{:.9g}\t{:.9g}\n", e.epoch, e.train_loss, e.validation_loss);
  }
  out += fmt::format("best_epoch\t{}\n", r.best_epoch);
  return out;
}

std::string SerializeModel(const EstimatorModel& m) {
  ordered_json j;
  j["format"] = "jfuse-estimator";
  j["version"] = kModelVersion;
  j["variant"] = std::string(VariantName(m.variant));
  j["launch_overhead_us"] = m.launch_overhead_us;
  j["mem_us_per_byte"] = m.mem_us_per_byte;
  j["shape"] = {{"layers", m.shape.layers},
                {"hidden", m.shape.hidden},
                {"dense_layers", m.shape.dense_layers},
                {"dense_width", m.shape.dense_width}};
  j["vocabulary"] = m.vocabulary;
  j["scaling"] = {{"node_mean", m.scaling.node_mean},
                  {"node_std", m.scaling.node_std},
                  {"agg_mean", m.scaling.agg_mean},
                  {"agg_std", m.scaling.agg_std}};
  j["params"] = m.params;
  return j.dump(1) + "\n";
}

namespace {

template <size_t N>
std::array<double, N> ReadArray(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N) {
    throw Error(ErrorCode::kInput, fmt::format("model: {} must hold {} numbers", key, N));
  }
  std::array<double, N> out{};
  for (size_t i = 0; i < N; ++i) {
    if (!j[key][i].is_number()) {
      throw Error(ErrorCode::kInput, fmt::format("model: {} must hold numbers", key));
    }
    out[i] = j[key][i].get<double>();
  }
  return out;
}

}  // namespace

EstimatorModel ParseModel(const std::string& text) {
  const json j = ParseJsonText(text, "estimator model");
  auto fail = [](const std::string& what) {
    return Error(ErrorCode::kInput, "model: " + what);
  };
  if (!j.is_object()) throw fail("document must be an object");
  static const char* kKeys[] = {"format",     "version", "variant", "launch_overhead_us",
                                "mem_us_per_byte", "shape", "vocabulary", "scaling",
                                "params"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw fail("unknown key " + key);
    }
  }
  for (const char* k : kKeys) {
    if (!j.contains(k)) throw fail(std::string("missing key ") + k);
  }
  if (j["format"] != "jfuse-estimator") throw fail("unrecognized format tag");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kModelVersion) {
    throw fail("unsupported version");
  }
  if (!j["variant"].is_string()) throw fail("variant must be a string");
  std::optional<EstimatorVariant> v = ParseVariant(j["variant"].get<std::string>());
  if (!v) throw fail("unknown variant " + j["variant"].get<std::string>());
  EstimatorModel m;
  m.variant = *v;
  if (!j["launch_overhead_us"].is_number() || !j["mem_us_per_byte"].is_number()) {
    throw fail("analytic coefficients must be numbers");
  }
  m.launch_overhead_us = j["launch_overhead_us"].get<double>();
  m.mem_us_per_byte = j["mem_us_per_byte"].get<double>();
  const json& sh = j["shape"];
  for (const char* k : {"layers", "hidden", "dense_layers", "dense_width"}) {
    if (!sh.is_object() || !sh.contains(k) || !sh[k].is_number_integer()) {
      throw fail(std::string("shape.") + k + " must be an integer");
    }
  }
  if (sh.size() != 4) throw fail("shape has unknown keys");
  m.shape = MpShape{sh["layers"].get<int>(), sh["hidden"].get<int>(),
                    sh["dense_layers"].get<int>(), sh["dense_width"].get<int>()};
  if (m.shape.layers < 0 || m.shape.hidden < 1 || m.shape.dense_layers < 0 ||
      m.shape.dense_width < 1) {
    throw fail("invalid shape");
  }
  if (!j["vocabulary"].is_array()) throw fail("vocabulary must be an array");
  for (const json& w : j["vocabulary"]) {
    if (!w.is_string()) throw fail("vocabulary entries must be strings");
    m.vocabulary.push_back(w.get<std::string>());
  }
  const json& sc = j["scaling"];
  if (!sc.is_object() || sc.size() != 4) throw fail("scaling must hold four arrays");
  m.scaling.node_mean = ReadArray<kNodeNumericDim>(sc, "node_mean");
  m.scaling.node_std = ReadArray<kNodeNumericDim>(sc, "node_std");
  m.scaling.agg_mean = ReadArray<kAggregateDim>(sc, "agg_mean");
  m.scaling.agg_std = ReadArray<kAggregateDim>(sc, "agg_std");
  if (!j["params"].is_array()) throw fail("params must be an array");
  for (const json& p : j["params"]) {
    if (!p.is_number()) throw fail("params must be numbers");
    m.params.push_back(p.get<double>());
  }
  CheckParamCount(m);
  return m;
}

}  // namespace jfuse

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

#ifndef JFUSE_ESTIMATOR_KERNELS_H_
#define JFUSE_ESTIMATOR_KERNELS_H_

#include <cmath>
#include <cstddef>
#include <vector>

#include "jfuse/estimator.h"

namespace jfuse {

// Elementary functions used by the forward pass. Specialize for scalar types
// that std:: does not cover.
template <typename T>
struct ScalarMath {
  static T Exp(T x) { return std::exp(x); }
  static T Log(T x) { return std::log(x); }
  static T Log1p(T x) { return std::log1p(x); }
};

template <typename T>
T Relu(T x) {
  return x > T(0) ? x : T(0);
}

template <typename T>
T Softplus(T x) {
  using M = ScalarMath<T>;
  return x > T(0) ? x + M::Log1p(M::Exp(-x)) : M::Log1p(M::Exp(x));
}

// ln(softplus(x)) without underflow for very negative x.
template <typename T>
T LogSoftplus(T x) {
  using M = ScalarMath<T>;
  if (x < T(-30)) return x + M::Log1p(-M::Exp(x) / T(2));
  return M::Log(Softplus(x));
}

// Offsets of each weight block inside EstimatorModel::params for the
// message-passing variant. Matrices are row-major [out][in].
struct MpLayout {
  size_t input_dim = 0;
  size_t hidden = 0;
  size_t layers = 0;
  size_t dense_layers = 0;
  size_t dense_width = 0;

  size_t w0 = 0;                   // hidden x input_dim
  std::vector<size_t> w;           // per layer, hidden x hidden
  size_t readout = 0;              // hidden x hidden
  std::vector<size_t> dense_w;     // [0]: width x (hidden + aggregates)
  std::vector<size_t> dense_b;
  size_t out_w = 0;                // width
  size_t out_b = 0;
  size_t total = 0;

  size_t DenseIn(size_t k) const {
    return k == 0 ? hidden + kAggregateDim : dense_width;
  }

  static MpLayout For(const EstimatorModel& m) {
    MpLayout l;
    l.input_dim = m.NodeInputDim();
    l.hidden = static_cast<size_t>(m.shape.hidden);
    l.layers = static_cast<size_t>(m.shape.layers);
    l.dense_layers = static_cast<size_t>(m.shape.dense_layers);
    l.dense_width = static_cast<size_t>(m.shape.dense_width);
    size_t at = 0;
    l.w0 = at;
    at += l.hidden * l.input_dim;
    for (size_t i = 0; i < l.layers; ++i) {
      l.w.push_back(at);
      at += l.hidden * l.hidden;
    }
    l.readout = at;
    at += l.hidden * l.hidden;
    for (size_t k = 0; k < l.dense_layers; ++k) {
      l.dense_w.push_back(at);
      at += l.dense_width * l.DenseIn(k);
      l.dense_b.push_back(at);
      at += l.dense_width;
    }
    l.out_w = at;
    at += l.dense_layers > 0 ? l.dense_width : l.hidden + kAggregateDim;
    l.out_b = at;
    at += 1;
    l.total = at;
    return l;
  }

  size_t HeadWidth() const {
    return dense_layers > 0 ? dense_width : hidden + kAggregateDim;
  }
};

inline constexpr size_t kLinearParamCount = kAggregateDim + 1;

// Intermediate values of one message-passing forward pass.
template <typename T>
struct MpTape {
  std::vector<std::vector<T>> h;    // layer 0..L, num_nodes x hidden
  std::vector<std::vector<T>> agg;  // layer 1..L (index l-1), mean inputs
  std::vector<std::vector<T>> pre;  // layer 1..L (index l-1), pre-activation
  std::vector<T> pooled;            // sum over nodes of h[L]
  std::vector<T> readout_pre;
  std::vector<std::vector<T>> dense_in;   // input of dense layer k
  std::vector<std::vector<T>> dense_pre;  // pre-activation of dense layer k
  std::vector<T> head;                    // input of the output unit
  T z = T(0);
};

// ln(prediction) of the message-passing variant.
template <typename T>
T MpLogPredict(const MpLayout& lay, const T* p, const PreparedSample& s,
               MpTape<T>* tape) {
  const size_t n = static_cast<size_t>(s.num_nodes);
  const size_t hd = lay.hidden;
  MpTape<T> local;
  MpTape<T>& t = tape != nullptr ? *tape : local;
  t.h.assign(lay.layers + 1, std::vector<T>(n * hd, T(0)));
  t.agg.assign(lay.layers, std::vector<T>(n * hd, T(0)));
  t.pre.assign(lay.layers, std::vector<T>(n * hd, T(0)));

  for (size_t i = 0; i < n; ++i) {
    const double* x = &s.x[i * lay.input_dim];
    T* out = &t.h[0][i * hd];
    for (size_t r = 0; r < hd; ++r) {
      const T* row = p + lay.w0 + r * lay.input_dim;
      T acc = T(0);
      for (size_t c = 0; c < lay.input_dim; ++c) {
        if (x[c] != 0.0) acc += row[c] * T(x[c]);
      }
      out[r] = acc;
    }
  }
  for (size_t l = 0; l < lay.layers; ++l) {
    const std::vector<T>& in = t.h[l];
    std::vector<T>& agg = t.agg[l];
    std::vector<T>& pre = t.pre[l];
    std::vector<T>& out = t.h[l + 1];
    const T* w = p + lay.w[l];
    for (size_t i = 0; i < n; ++i) {
      const std::vector<int>& nb = s.closed[i];
      T* a = &agg[i * hd];
      for (int j : nb) {
        const T* hj = &in[static_cast<size_t>(j) * hd];
        for (size_t c = 0; c < hd; ++c) a[c] += hj[c];
      }
      const T inv = T(1) / T(static_cast<double>(nb.size()));
      for (size_t c = 0; c < hd; ++c) a[c] *= inv;
      for (size_t r = 0; r < hd; ++r) {
        const T* row = w + r * hd;
        T acc = T(0);
        for (size_t c = 0; c < hd; ++c) acc += row[c] * a[c];
        pre[i * hd + r] = acc;
        out[i * hd + r] = Relu(acc);
      }
    }
  }
  t.pooled.assign(hd, T(0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t c = 0; c < hd; ++c) t.pooled[c] += t.h[lay.layers][i * hd + c];
  }
  t.readout_pre.assign(hd, T(0));
  std::vector<T> cur(hd + kAggregateDim, T(0));
  for (size_t r = 0; r < hd; ++r) {
    const T* row = p + lay.readout + r * hd;
    T acc = T(0);
    for (size_t c = 0; c < hd; ++c) acc += row[c] * t.pooled[c];
    t.readout_pre[r] = acc;
    cur[r] = Relu(acc);
  }
  for (size_t a = 0; a < kAggregateDim; ++a) cur[hd + a] = T(s.phi[a]);

  t.dense_in.assign(lay.dense_layers, {});
  t.dense_pre.assign(lay.dense_layers, {});
  for (size_t k = 0; k < lay.dense_layers; ++k) {
    const size_t in_dim = lay.DenseIn(k);
    t.dense_in[k] = cur;
    std::vector<T> next(lay.dense_width);
    t.dense_pre[k].assign(lay.dense_width, T(0));
    for (size_t r = 0; r < lay.dense_width; ++r) {
      const T* row = p + lay.dense_w[k] + r * in_dim;
      T acc = p[lay.dense_b[k] + r];
      for (size_t c = 0; c < in_dim; ++c) acc += row[c] * cur[c];
      t.dense_pre[k][r] = acc;
      next[r] = Relu(acc);
    }
    cur = std::move(next);
  }
  t.head = cur;
  T z = p[lay.out_b];
  for (size_t c = 0; c < lay.HeadWidth(); ++c) z += p[lay.out_w + c] * cur[c];
  t.z = z;
  return ScalarMath<T>::Log(T(s.sum_compute)) + LogSoftplus(z);
}

// ln(prediction) of the feature-linear variant.
template <typename T>
T LinearLogPredict(const T* p, const PreparedSample& s) {
  T z = p[kAggregateDim];
  for (size_t a = 0; a < kAggregateDim; ++a) z += p[a] * T(s.phi[a]);
  return ScalarMath<T>::Log(T(s.sum_compute)) + z;
}

// Squared log error of a learned variant for an arbitrary scalar type.
template <typename T>
T LearnedSampleLoss(const EstimatorModel& m, const T* p, const PreparedSample& s,
                    double actual_us) {
  T log_pred = m.variant == EstimatorVariant::kLinearFeatures
                   ? LinearLogPredict(p, s)
                   : MpLogPredict<T>(MpLayout::For(m), p, s, nullptr);
  const T r = log_pred - ScalarMath<T>::Log(T(actual_us));
  return r * r;
}

}  // namespace jfuse

#endif  // JFUSE_ESTIMATOR_KERNELS_H_

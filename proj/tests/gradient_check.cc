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

#include "gradient_check.h"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "jfuse/estimator_kernels.h"

namespace jfuse {

template <>
struct ScalarMath<__float128> {
  static __float128 Exp(__float128 x) { return expq(x); }
  static __float128 Log(__float128 x) { return logq(x); }
  static __float128 Log1p(__float128 x) { return log1pq(x); }
};

namespace testing {
namespace {

const std::vector<std::string> kVocab = {"Add", "MatMul", "Mul", "Relu"};

}  // namespace

SubgraphFeatures RandomFeatures(Rng& rng, int max_nodes) {
  static const char* kCodes[] = {"Add", "MatMul", "Mul", "Relu", "Unseen"};
  SubgraphFeatures f;
  const int n = static_cast<int>(UniformInt(rng, 1, max_nodes));
  for (int i = 0; i < n; ++i) {
    f.nodes.push_back(NodeFeatures{kCodes[UniformIndex(rng, 5)], LogUniform(rng, 1, 1000),
                                   LogUniform(rng, 1e3, 1e7), LogUniform(rng, 1e3, 1e7)});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || UniformUnit(rng) < 0.3) {
        f.edges.push_back(MemberEdge{i, j, LogUniform(rng, 1e3, 1e6)});
      }
    }
  }
  f.external_in_bytes = LogUniform(rng, 1e3, 1e7);
  f.external_out_bytes = LogUniform(rng, 1e3, 1e7);
  return f;
}

GradientCheckSummary CheckLearnedGradients(EstimatorVariant variant, int draws,
                                           uint64_t seed, double tolerance) {
  GradientCheckSummary out;
  Rng rng(seed);
  for (int draw = 0; draw < draws; ++draw) {
    EstimatorModel m;
    std::vector<size_t> which;
    if (variant == EstimatorVariant::kLinearFeatures) {
      m = EstimatorModel::LinearFeatures();
      for (double& p : m.params) p = 0.5 * StandardNormal(rng);
      for (size_t a = 0; a < kAggregateDim; ++a) {
        m.scaling.agg_mean[a] = StandardNormal(rng);
        m.scaling.agg_std[a] = LogUniform(rng, 0.5, 4);
      }
      which.resize(m.params.size());
      std::iota(which.begin(), which.end(), 0);
    } else {
      // Most draws use small random shapes so every parameter is checked;
      // every tenth uses the default shape on a random parameter subset.
      const bool full = draw % 10 == 0;
      MpShape shape{static_cast<int>(UniformInt(rng, 0, 3)),
                    static_cast<int>(UniformInt(rng, 1, 6)),
                    static_cast<int>(UniformInt(rng, 0, 2)),
                    static_cast<int>(UniformInt(rng, 1, 6))};
      if (full) shape = MpShape{};
      m = EstimatorModel::MessagePassing(kVocab, shape, seed + static_cast<uint64_t>(draw));
      const double scale = full ? 0.05 : 0.5;
      for (double& p : m.params) p += scale * StandardNormal(rng);
      for (size_t k = 0; k < kNodeNumericDim; ++k) {
        m.scaling.node_mean[k] = UniformReal(rng, 0, 8);
        m.scaling.node_std[k] = UniformReal(rng, 1, 3);
      }
      which.resize(m.params.size());
      std::iota(which.begin(), which.end(), 0);
      if (full) {
        Shuffle(which, rng);
        which.resize(300);
        which.push_back(MpLayout::For(m).out_b);
      }
    }
    const SubgraphFeatures f = RandomFeatures(rng, 7);
    const double actual = f.SumCompute() * UniformReal(rng, 0.3, 1.5);

    const PreparedSample s = Prepare(m, f);
    std::vector<double> grad(m.params.size(), 0.0);
    SampleLossAndGrad(m, s, actual, &grad);
    std::vector<__float128> q(m.params.begin(), m.params.end());
    for (size_t k : which) {
      if (std::abs(grad[k]) <= 1e-8) continue;
      const __float128 orig = q[k];
      const __float128 h = 1e-12Q * (1 + fabsq(orig));
      q[k] = orig + h;
      const __float128 up = LearnedSampleLoss<__float128>(m, q.data(), s, actual);
      q[k] = orig - h;
      const __float128 down = LearnedSampleLoss<__float128>(m, q.data(), s, actual);
      q[k] = orig;
      const double fd = static_cast<double>((up - down) / (2 * h));
      const double rel = std::abs(grad[k] - fd) / std::max(std::abs(grad[k]), std::abs(fd));
      ++out.checked;
      out.max_rel_err = std::max(out.max_rel_err, rel);
      if (!(rel < tolerance)) {
        if (out.violations == 0) {
          out.first_violation =
              fmt::format("draw {} param {}: analytic {} vs fd {}", draw, k, grad[k], fd);
        }
        ++out.violations;
      }
    }
    ++out.draws;
  }
  return out;
}

}  // namespace testing
}  // namespace jfuse

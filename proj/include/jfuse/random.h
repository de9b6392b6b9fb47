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

#ifndef JFUSE_RANDOM_H_
#define JFUSE_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace jfuse {

// The standard distributions are implementation-defined, so every draw that
// feeds a reproducible artifact goes through these helpers instead.
using Rng = std::mt19937_64;

// Uniform integer in [0, n). n must be > 0.
inline uint64_t UniformIndex(Rng& rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Uniform integer in [lo, hi], inclusive on both ends.
inline int64_t UniformInt(Rng& rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(
                  UniformIndex(rng, static_cast<uint64_t>(hi - lo) + 1));
}

// Uniform double in [0, 1).
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformReal(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformUnit(rng);
}

// Log-uniform value in [lo, hi]; lo > 0.
inline double LogUniform(Rng& rng, double lo, double hi) {
  return std::exp(UniformReal(rng, std::log(lo), std::log(hi)));
}

// Standard normal via Box-Muller.
inline double StandardNormal(Rng& rng) {
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename Vec>
void Shuffle(Vec& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = UniformIndex(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace jfuse

#endif  // JFUSE_RANDOM_H_

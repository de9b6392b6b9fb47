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

#ifndef JFUSE_COMM_MODEL_H_
#define JFUSE_COMM_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

namespace jfuse {

// AllReduce time T = C * bytes + D.
struct CommModelParams {
  double C = 0.0;  // us per byte
  double D = 0.0;  // us per AllReduce call
};

struct CommSample {
  double bytes = 0.0;
  double measured_us = 0.0;
};

struct CommFit {
  CommModelParams params;
  bool slope_clamped = false;      // least-squares slope was negative
  bool intercept_clamped = false;  // least-squares intercept was negative
  std::string warning;
};

double predict(const CommModelParams& p, double bytes);

// Ordinary least squares. Throws Error(kDegenerateSamples) for fewer than two
// samples or a single distinct byte count, Error(kInput) for non-positive
// samples.
CommFit fit(const std::vector<CommSample>& samples);

// Ring AllReduce: 2 (N - 1) bytes / (B N). Throws Error(kBadTopology) when
// N < 2 or B <= 0.
double ring_allreduce_time(double bytes, int64_t devices, double bytes_per_us);

// "bytes measured_us" per line; blank lines and '#' comments ignored.
std::vector<CommSample> ParseCommSamples(const std::string& text);
std::string FormatCommSamples(const std::vector<CommSample>& samples);

// {"C": ..., "D": ...}
CommModelParams ParseCommParams(const std::string& text);
std::string FormatCommParams(const CommModelParams& p);

}  // namespace jfuse

#endif  // JFUSE_COMM_MODEL_H_

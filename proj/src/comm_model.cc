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

#include "jfuse/comm_model.h"

#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "jfuse/errors.h"

namespace jfuse {

double predict(const CommModelParams& p, double bytes) {
  return p.C * bytes + p.D;
}

CommFit fit(const std::vector<CommSample>& samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kDegenerateSamples,
                fmt::format("need at least 2 samples, got {}", samples.size()));
  }
  std::set<double> distinct;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const CommSample& s : samples) {
    if (!(s.bytes > 0.0) || !(s.measured_us > 0.0) || !std::isfinite(s.bytes) ||
        !std::isfinite(s.measured_us)) {
      throw Error(ErrorCode::kInput,
                  fmt::format("invalid comm sample ({}, {})", s.bytes, s.measured_us));
    }
    distinct.insert(s.bytes);
    mean_x += s.bytes;
    mean_y += s.measured_us;
  }
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegenerateSamples, "all samples share one byte count");
  }
  const double n = static_cast<double>(samples.size());
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const CommSample& s : samples) {
    const double dx = s.bytes - mean_x;
    sxx += dx * dx;
    sxy += dx * (s.measured_us - mean_y);
  }
  CommFit out;
  double slope = sxy / sxx;
  double intercept = mean_y - slope * mean_x;
  if (slope < 0.0) {
    out.slope_clamped = true;
    out.warning = fmt::format("negative slope {} clamped to 0", slope);
    slope = 0.0;
    intercept = mean_y;
  }
  if (intercept < 0.0) {
    out.intercept_clamped = true;
    if (!out.warning.empty()) out.warning += "; ";
    out.warning += fmt::format("negative intercept {} clamped to 0", intercept);
    intercept = 0.0;
  }
  out.params.C = slope;
  out.params.D = intercept;
  return out;
}

double ring_allreduce_time(double bytes, int64_t devices, double bytes_per_us) {
  if (devices < 2) {
    throw Error(ErrorCode::kBadTopology,
                fmt::format("ring needs at least 2 devices, got {}", devices));
  }
  if (!(bytes_per_us > 0.0)) {
    throw Error(ErrorCode::kBadTopology,
                fmt::format("bandwidth must be positive, got {}", bytes_per_us));
  }
  const double n = static_cast<double>(devices);
  return 2.0 * (n - 1.0) * bytes / (bytes_per_us * n);
}

std::vector<CommSample> ParseCommSamples(const std::string& text) {
  std::vector<CommSample> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    CommSample s;
    if (!(fields >> s.bytes)) continue;
    std::string rest;
    if (!(fields >> s.measured_us) || (fields >> rest)) {
      throw Error(ErrorCode::kInput,
                  fmt::format("comm samples line {}: expected 'bytes measured_us'", line_no));
    }
    out.push_back(s);
  }
  return out;
}

std::string FormatCommSamples(const std::vector<CommSample>& samples) {
  std::string out;
  for (const CommSample& s : samples) {
    out += fmt::format("{} {}\n", s.bytes, s.measured_us);
  }
  return out;
}

CommModelParams ParseCommParams(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInput, fmt::format("comm params: {}", e.what()));
  }
  if (!j.is_object() || j.size() != 2 || !j.contains("C") || !j.contains("D") ||
      !j["C"].is_number() || !j["D"].is_number()) {
    throw Error(ErrorCode::kInput, "comm params must be {\"C\": number, \"D\": number}");
  }
  CommModelParams p{j["C"].get<double>(), j["D"].get<double>()};
  if (!(p.C >= 0.0) || !(p.D >= 0.0) || !std::isfinite(p.C) || !std::isfinite(p.D)) {
    throw Error(ErrorCode::kInput, "comm params must be finite and non-negative");
  }
  return p;
}

std::string FormatCommParams(const CommModelParams& p) {
  nlohmann::ordered_json j;
  j["C"] = p.C;
  j["D"] = p.D;
  return j.dump(1) + "\n";
}

}  // namespace jfuse

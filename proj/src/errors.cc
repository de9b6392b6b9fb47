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

#include "jfuse/errors.h"

#include <fmt/format.h>

namespace jfuse {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kCycle: return "CycleError";
    case ErrorCode::kMissingCost: return "MissingCost";
    case ErrorCode::kInvalidCost: return "InvalidCost";
    case ErrorCode::kDegenerateSamples: return "DegenerateSamples";
    case ErrorCode::kBadTopology: return "BadTopology";
    case ErrorCode::kUnknownOp: return "UnknownOp";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonPositiveTime: return "NonPositiveTime";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kLimitExceeded: return "LimitExceeded";
    case ErrorCode::kInput: return "InputError";
    case ErrorCode::kUsage: return "UsageError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", ErrorCodeName(code), message)),
      code_(code) {}

}  // namespace jfuse

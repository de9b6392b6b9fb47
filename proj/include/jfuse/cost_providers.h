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

#ifndef JFUSE_COST_PROVIDERS_H_
#define JFUSE_COST_PROVIDERS_H_

#include "jfuse/comm_model.h"
#include "jfuse/estimator.h"
#include "jfuse/simulator.h"

namespace jfuse {

// Single-op groups use the profiled time; fused groups go through the
// estimator; buckets use the linear AllReduce model on their total size.
// Fused-group predictions are cached per group content and are safe to
// request concurrently.
CostProviders MakeCostProviders(Profile profile, EstimatorModel model,
                                CommModelParams comm);

}  // namespace jfuse

#endif  // JFUSE_COST_PROVIDERS_H_

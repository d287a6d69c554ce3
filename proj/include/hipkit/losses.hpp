/* Copyright 2026 The hipkit Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <span>
#include <vector>

#include "hipkit/bev_grid.hpp"

namespace hipkit {

struct LossConfig {
  double alpha = 2.0;
  double beta = 4.0;
  double epsilon = 1e-12;

  void validate() const;
};

/// Sum in a fixed pairwise tree order; the result does not depend on how the
/// caller partitions work.
double pairwise_sum(std::span<const double> values);

/// Gaussian focal loss between a predicted heatmap and a Gaussian target.
/// Cells with target exactly 1 are positives:
///   positive: (1 - p)^alpha * -log(p)
///   negative: (1 - t)^beta * p^alpha * -log(1 - p)
/// with p clamped to [epsilon, 1 - epsilon], normalized by max(1, #positives).
double gaussian_focal_loss(const Heatmap& pred, const Heatmap& target,
                           const LossConfig& cfg = {});

/// Sum of per-stage losses. Throws ConfigError on length or shape mismatch.
double multi_stage_loss(std::span<const Heatmap> preds, std::span<const Heatmap> targets,
                        const LossConfig& cfg = {});

}  // namespace hipkit

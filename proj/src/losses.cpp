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

#include "hipkit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hipkit/errors.hpp"

namespace hipkit {

void LossConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 0.5)");
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double gaussian_focal_loss(const Heatmap& pred, const Heatmap& target, const LossConfig& cfg) {
  cfg.validate();
  if (!(pred.spec() == target.spec())) {
    throw ConfigError("focal loss: prediction and target shapes differ");
  }
  std::vector<double> terms(pred.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(double(pred[i]), cfg.epsilon, 1.0 - cfg.epsilon);
    const double t = target[i];
    if (target[i] == 1.0f) {
      ++positives;
      terms[i] = std::pow(1.0 - p, cfg.alpha) * -std::log(p);
    } else {
      terms[i] = std::pow(1.0 - t, cfg.beta) * std::pow(p, cfg.alpha) * -std::log(1.0 - p);
    }
  }
  return pairwise_sum(terms) / double(std::max<std::size_t>(1, positives));
}

double multi_stage_loss(std::span<const Heatmap> preds, std::span<const Heatmap> targets,
                        const LossConfig& cfg) {
  if (preds.size() != targets.size()) {
    throw ConfigError("multi-stage loss: " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    total += gaussian_focal_loss(preds[s], targets[s], cfg);
  }
  return total;
}

}  // namespace hipkit

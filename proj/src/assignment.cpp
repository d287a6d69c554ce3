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

#include "hipkit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hipkit/errors.hpp"
#include "hipkit/geometry.hpp"

namespace hipkit {

void MatchConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (metric == MatchMetric::RotatedIoU && !(eta < 1.0)) {
    throw ConfigError("IoU eta must lie in (0, 1)");
  }
}

double MatchConfig::evaluate(const BevBox& pred, const BevBox& gt) const {
  return metric == MatchMetric::CenterDistance ? center_distance(pred, gt)
                                               : rotated_iou_bev(pred, gt);
}

bool MatchConfig::accepts(double value) const {
  return metric == MatchMetric::CenterDistance ? value < eta : value > eta;
}

bool MatchConfig::better(double a, double b) const {
  return metric == MatchMetric::CenterDistance ? a < b : a > b;
}

std::vector<BevBox> candidate_boxes(std::span<const Candidate> cands, double length,
                                    double width) {
  std::vector<BevBox> boxes;
  boxes.reserve(cands.size());
  for (const Candidate& c : cands) {
    boxes.push_back(BevBox{c.world_center.x(), c.world_center.y(), length, width, 0.0,
                           c.class_id, static_cast<double>(c.score)});
  }
  return boxes;
}

StageAssignment classify_stage(std::span<const BevBox> preds, std::span<const BevBox> gts,
                               const std::set<std::size_t>& remaining, const MatchConfig& cfg,
                               int stage) {
  cfg.validate();
  StageAssignment out;
  out.stage = stage;
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score_or(0.0) > preds[b].score_or(0.0);
  });

  std::set<std::size_t> open = remaining;
  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (std::size_t g : open) {
      if (gts[g].class_id != preds[p].class_id) continue;
      const double value = cfg.evaluate(preds[p], gts[g]);
      if (!cfg.accepts(value)) continue;
      if (!best || cfg.better(value, best_value)) {
        best = g;
        best_value = value;
      }
    }
    if (best) {
      out.matched_pairs.push_back({*best, p, best_value});
      out.tp_gt.insert(*best);
      open.erase(*best);
    }
  }
  out.fn_gt = std::move(open);
  return out;
}

std::vector<StageAssignment> classify_stages(std::span<const Candidate> cands,
                                             std::span<const BevBox> gts, int num_stages,
                                             const MatchConfig& cfg) {
  std::set<std::size_t> remaining;
  for (std::size_t i = 0; i < gts.size(); ++i) remaining.insert(i);
  std::vector<StageAssignment> out;
  for (int stage = 0; stage < num_stages; ++stage) {
    std::vector<Candidate> stage_cands;
    for (const Candidate& c : cands) {
      if (c.stage == stage) stage_cands.push_back(c);
    }
    const auto boxes = candidate_boxes(stage_cands);
    out.push_back(classify_stage(boxes, gts, remaining, cfg, stage));
    remaining = out.back().fn_gt;
  }
  return out;
}

std::set<std::size_t> hard_instance_targets(std::size_t num_gt,
                                            std::span<const StageAssignment> stages) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < num_gt; ++i) out.insert(i);
  for (const StageAssignment& s : stages) {
    for (std::size_t g : s.tp_gt) out.erase(g);
  }
  return out;
}

std::vector<std::pair<int, int>> Assignment::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] >= 0) out.emplace_back(static_cast<int>(r), row_to_col[r]);
  }
  return out;
}

void AssignmentConfig::validate() const {
  if (!(gate_distance > 0.0)) throw ConfigError("gate_distance must be positive");
}

GatedCost gated_cost_matrix(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            const AssignmentConfig& cfg, const PairCost& base_cost) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(preds.size());
  const auto m = static_cast<Eigen::Index>(gts.size());
  GatedCost out;
  out.cost.resize(n, m);
  out.feasible.resize(n, m);
  double max_cost = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double c = base_cost(preds[i], gts[j]);
      if (!std::isfinite(c)) throw DataError("base cost must be finite");
      out.cost(i, j) = c;
      out.feasible(i, j) = center_distance(preds[i], gts[j]) <= cfg.gate_distance;
      max_cost = std::max(max_cost, std::abs(c));
    }
  }
  out.sentinel = 1e6 * std::max(max_cost, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!out.feasible(i, j)) out.cost(i, j) = out.sentinel;
    }
  }
  return out;
}

std::vector<GatedMatch> gated_assign(std::span<const BevBox> preds, std::span<const BevBox> gts,
                                     const AssignmentConfig& cfg, const PairCost& base_cost) {
  const GatedCost gc = gated_cost_matrix(preds, gts, cfg, base_cost);
  const Assignment a = hungarian_assign(gc.cost);
  std::vector<GatedMatch> out;
  for (const auto& [r, c] : a.pairs()) {
    out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), gc.cost(r, c),
                   static_cast<bool>(gc.feasible(r, c))});
  }
  return out;
}

}  // namespace hipkit

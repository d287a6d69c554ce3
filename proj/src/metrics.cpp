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

#include "hipkit/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hipkit/errors.hpp"
#include "hipkit/geometry.hpp"

namespace hipkit {

void RecallConfig::validate() const {
  if (thresholds.empty()) throw ConfigError("at least one recall threshold is required");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw ConfigError("recall thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw ConfigError("recall thresholds must be strictly increasing");
    }
  }
}

RecallCounts& RecallCounts::operator+=(const RecallCounts& o) {
  num_gt += o.num_gt;
  num_pred += o.num_pred;
  if (matched.size() < o.matched.size()) matched.resize(o.matched.size(), 0);
  for (std::size_t i = 0; i < o.matched.size(); ++i) matched[i] += o.matched[i];
  return *this;
}

namespace {

std::vector<std::size_t> score_order(std::span<const BevBox> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score_or(0.0) > preds[b].score_or(0.0);
  });
  return order;
}

std::vector<double> recalls(const RecallCounts& c, std::size_t nthr) {
  std::vector<double> r(nthr, 1.0);
  if (c.num_gt == 0) return r;
  for (std::size_t t = 0; t < nthr; ++t) {
    r[t] = static_cast<double>(c.matched[t]) / static_cast<double>(c.num_gt);
  }
  return r;
}

}  // namespace

std::vector<int> greedy_center_match(std::span<const BevBox> preds, std::span<const BevBox> gts,
                                     double threshold, bool class_agnostic) {
  std::vector<int> gt_to_pred(gts.size(), -1);
  for (std::size_t p : score_order(preds)) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_to_pred[g] >= 0) continue;
      if (!class_agnostic && gts[g].class_id != preds[p].class_id) continue;
      const double d = center_distance(preds[p], gts[g]);
      if (d < threshold && d < best_d) {
        best = static_cast<int>(g);
        best_d = d;
      }
    }
    if (best >= 0) gt_to_pred[static_cast<std::size_t>(best)] = static_cast<int>(p);
  }
  return gt_to_pred;
}

RecallAccumulator::RecallAccumulator(RecallConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  total_.matched.assign(cfg_.thresholds.size(), 0);
}

void RecallAccumulator::add(std::span<const BevBox> preds, std::span<const BevBox> gts) {
  const std::size_t nthr = cfg_.thresholds.size();
  total_.num_gt += gts.size();
  total_.num_pred += preds.size();
  for (const BevBox& g : gts) {
    auto& row = per_class_[g.class_id];
    row.matched.resize(nthr, 0);
    ++row.num_gt;
  }
  for (const BevBox& p : preds) {
    auto& row = per_class_[p.class_id];
    row.matched.resize(nthr, 0);
    ++row.num_pred;
  }
  for (std::size_t t = 0; t < nthr; ++t) {
    const auto match = greedy_center_match(preds, gts, cfg_.thresholds[t], cfg_.class_agnostic);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (match[g] < 0) continue;
      ++total_.matched[t];
      ++per_class_[gts[g].class_id].matched[t];
    }
  }
}

void RecallAccumulator::add(const RecallReport& report) {
  if (report.thresholds != cfg_.thresholds) {
    throw ConfigError("cannot merge a report computed at different thresholds");
  }
  total_ += report.counts;
  for (const ClassRecall& row : report.per_class) per_class_[row.class_id] += row.counts;
}

RecallAccumulator& RecallAccumulator::operator+=(const RecallAccumulator& o) {
  if (o.cfg_.thresholds != cfg_.thresholds || o.cfg_.class_agnostic != cfg_.class_agnostic) {
    throw ConfigError("cannot merge recall accumulators with different configs");
  }
  total_ += o.total_;
  for (const auto& [cls, counts] : o.per_class_) per_class_[cls] += counts;
  return *this;
}

RecallReport RecallAccumulator::report() const {
  const std::size_t nthr = cfg_.thresholds.size();
  RecallReport r;
  r.thresholds = cfg_.thresholds;
  r.counts = total_;
  r.empty_gt = total_.num_gt == 0;
  r.recall = recalls(total_, nthr);
  r.mean_recall = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / double(nthr);
  for (const auto& [cls, counts] : per_class_) {
    r.per_class.push_back({cls, counts, recalls(counts, nthr)});
  }
  return r;
}

RecallReport average_recall(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            const RecallConfig& cfg) {
  RecallAccumulator acc(cfg);
  acc.add(preds, gts);
  return acc.report();
}

std::vector<ClassRecall> classwise_recall(std::span<const BevBox> preds,
                                          std::span<const BevBox> gts, const RecallConfig& cfg) {
  return average_recall(preds, gts, cfg).per_class;
}

APResult ap_center_distance(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            double threshold, bool class_agnostic) {
  APResult out;
  out.no_gt = gts.empty();
  out.no_predictions = preds.empty();
  if (out.no_gt || out.no_predictions) return out;
  for (const BevBox& p : preds) {
    if (!p.score) throw DataError("average precision requires scored predictions");
  }

  const auto match = greedy_center_match(preds, gts, threshold, class_agnostic);
  std::vector<char> is_tp(preds.size(), 0);
  for (int p : match) {
    if (p >= 0) is_tp[static_cast<std::size_t>(p)] = 1;
  }
  const auto order = score_order(preds);
  std::vector<double> precision(order.size()), recall(order.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    tp += is_tp[order[i]];
    precision[i] = double(tp) / double(i + 1);
    recall[i] = double(tp) / double(gts.size());
  }
  // Monotone precision envelope, then sum over recall steps.
  for (std::size_t i = order.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  out.ap = std::clamp(ap, 0.0, 1.0);
  return out;
}

}  // namespace hipkit

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

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "hipkit/box.hpp"

namespace hipkit {

struct RecallConfig {
  /// Center-distance thresholds in meters, strictly increasing.
  std::vector<double> thresholds{0.5, 1.0, 2.0, 4.0};
  /// Ignore classes when matching.
  bool class_agnostic = false;

  void validate() const;
};

/// Additive match counts; merging scenes is plain summation.
struct RecallCounts {
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
  std::vector<std::size_t> matched;  // per threshold

  RecallCounts& operator+=(const RecallCounts& o);
};

struct ClassRecall {
  int class_id = 0;
  RecallCounts counts;
  std::vector<double> recall;
};

struct RecallReport {
  std::vector<double> thresholds;
  RecallCounts counts;
  std::vector<double> recall;
  double mean_recall = 0.0;  // mAR
  /// No ground truth: recall is reported as 1.0.
  bool empty_gt = false;
  std::vector<ClassRecall> per_class;  // ascending class id
};

/// Greedy one-to-one matching by center distance (strictly below the
/// threshold). Predictions are visited by descending score, ties by index,
/// and each claims its nearest open ground truth. Returns, per ground
/// truth, the matched prediction index or -1.
std::vector<int> greedy_center_match(std::span<const BevBox> preds, std::span<const BevBox> gts,
                                     double threshold, bool class_agnostic = false);

/// Accumulates per-scene counts and produces pooled reports.
class RecallAccumulator {
 public:
  explicit RecallAccumulator(RecallConfig cfg);

  void add(std::span<const BevBox> preds, std::span<const BevBox> gts);
  /// Adds the counts of an already computed report with the same thresholds.
  void add(const RecallReport& report);
  RecallAccumulator& operator+=(const RecallAccumulator& o);
  RecallReport report() const;

 private:
  RecallConfig cfg_;
  RecallCounts total_;
  std::map<int, RecallCounts> per_class_;
};

RecallReport average_recall(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            const RecallConfig& cfg = {});

std::vector<ClassRecall> classwise_recall(std::span<const BevBox> preds,
                                          std::span<const BevBox> gts,
                                          const RecallConfig& cfg = {});

struct APResult {
  double ap = 0.0;
  bool no_predictions = false;
  bool no_gt = false;  // AP undefined; reported as 0
};

/// All-point interpolated average precision under greedy center-distance
/// matching at one threshold.
APResult ap_center_distance(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            double threshold, bool class_agnostic = false);

}  // namespace hipkit

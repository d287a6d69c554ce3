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
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hipkit/box.hpp"
#include "hipkit/hip_engine.hpp"

namespace hipkit {

enum class MatchMetric { CenterDistance, RotatedIoU };

/// Distance metrics match when value < eta; IoU matches when value > eta.
struct MatchConfig {
  MatchMetric metric = MatchMetric::CenterDistance;
  double eta = 0.5;

  void validate() const;
  double evaluate(const BevBox& pred, const BevBox& gt) const;
  bool accepts(double value) const;
  /// True when `a` is a strictly better match value than `b`.
  bool better(double a, double b) const;
};

struct MatchedPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double value = 0.0;
};

struct StageAssignment {
  int stage = 0;
  std::vector<MatchedPair> matched_pairs;
  std::set<std::size_t> tp_gt;
  /// Ground truth still unmatched after this and every earlier stage.
  std::set<std::size_t> fn_gt;
};

/// Boxes for candidates, centered on their cells; `size` is the footprint
/// (only relevant to IoU matching).
std::vector<BevBox> candidate_boxes(std::span<const Candidate> cands, double length = 1.0,
                                    double width = 1.0);

/// Greedy classification of the `remaining` ground truth against one stage's
/// predictions: predictions in descending score order (index breaks ties)
/// claim the best-valued acceptable unmatched ground truth of their class.
StageAssignment classify_stage(std::span<const BevBox> preds, std::span<const BevBox> gts,
                               const std::set<std::size_t>& remaining, const MatchConfig& cfg,
                               int stage = 0);

/// Runs classify_stage over stage-tagged candidates, carrying the unmatched
/// set forward.
std::vector<StageAssignment> classify_stages(std::span<const Candidate> cands,
                                             std::span<const BevBox> gts, int num_stages,
                                             const MatchConfig& cfg);

/// All ground truth minus the union of every stage's true positives.
std::set<std::size_t> hard_instance_targets(std::size_t num_gt,
                                            std::span<const StageAssignment> stages);

struct Assignment {
  /// row_to_col[i] = column assigned to row i, or -1.
  std::vector<int> row_to_col;
  double total_cost = 0.0;

  std::vector<std::pair<int, int>> pairs() const;
};

/// Minimum-cost one-to-one assignment of min(rows, cols) pairs
/// (Kuhn-Munkres with potentials, O(n^2 m)). Costs must be finite.
template <typename Derived>
Assignment hungarian_assign(const Eigen::MatrixBase<Derived>& cost) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  Assignment result;
  result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return result;

  // Solve with rows <= cols; transpose otherwise.
  const bool transposed = rows > cols;
  Eigen::MatrixXd a;
  if (transposed) {
    a = cost.transpose().template cast<double>();
  } else {
    a = cost.template cast<double>();
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<Eigen::Index> owner(m + 1, 0), way(m + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    owner[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = owner[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (Eigen::Index j = 1; j <= m; ++j) {
    if (owner[j] == 0) continue;
    const Eigen::Index r = owner[j] - 1;
    const Eigen::Index c = j - 1;
    if (transposed) {
      result.row_to_col[static_cast<std::size_t>(c)] = static_cast<int>(r);
    } else {
      result.row_to_col[static_cast<std::size_t>(r)] = static_cast<int>(c);
    }
  }
  Scalar total = Scalar(0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int c = result.row_to_col[static_cast<std::size_t>(r)];
    if (c >= 0) total += cost(r, c);
  }
  result.total_cost = static_cast<double>(total);
  return result;
}

struct AssignmentConfig {
  double gate_distance = 7.0;

  void validate() const;
};

using PairCost = std::function<double(const BevBox& pred, const BevBox& gt)>;

struct GatedCost {
  Eigen::MatrixXd cost;                                       // preds x gts
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feasible;
  double sentinel = 0.0;
};

/// Base costs with every pair farther apart than the gate replaced by
/// sentinel = 1e6 * max(max finite base cost, 1).
GatedCost gated_cost_matrix(std::span<const BevBox> preds, std::span<const BevBox> gts,
                            const AssignmentConfig& cfg, const PairCost& base_cost);

struct GatedMatch {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double cost = 0.0;
  bool feasible = false;
};

/// Hungarian assignment over the gated matrix; every assigned pair is
/// reported with its feasibility flag.
std::vector<GatedMatch> gated_assign(std::span<const BevBox> preds, std::span<const BevBox> gts,
                                     const AssignmentConfig& cfg, const PairCost& base_cost);

}  // namespace hipkit

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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hipkit/bev_grid.hpp"
#include "hipkit/box.hpp"

namespace hipkit {

/// A selected heatmap cell treated as an object hypothesis.
struct Candidate {
  int x = 0;
  int y = 0;
  int class_id = 0;
  float score = 0.0f;
  int stage = 0;
  Eigen::Vector2d world_center = Eigen::Vector2d::Zero();

  bool same_cell(const Candidate& o) const {
    return x == o.x && y == o.y && class_id == o.class_id;
  }
};

/// Binary [C][Y][X] tensor. The tag keeps per-stage masks and accumulated
/// masks from being mixed up.
template <typename Tag>
class BinaryMask {
 public:
  explicit BinaryMask(const BevGridSpec& spec) : spec_(spec), bits_(spec.num_cells(), 0) {
    spec_.validate();
  }

  const BevGridSpec& spec() const { return spec_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * spec_.size_y + y) * spec_.size_x + x;
  }
  bool test(int c, int y, int x) const { return bits_[index(c, y, x)] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int c, int y, int x) { bits_[index(c, y, x)] = 1; }
  void set_flat(std::size_t i) { bits_[i] = 1; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  bool operator==(const BinaryMask&) const = default;

 private:
  BevGridSpec spec_;
  std::vector<std::uint8_t> bits_;
};

struct PositiveMaskTag {};
struct AccumulatedMaskTag {};
using PositiveMask = BinaryMask<PositiveMaskTag>;
using AccumulatedPositiveMask = BinaryMask<AccumulatedMaskTag>;

enum class MaskType { Point, Pooling, Box };

std::string to_string(MaskType t);
/// Accepts "point", "pooling", "box" (case-insensitive). Throws ConfigError.
MaskType parse_mask_type(const std::string& s);

struct HipConfig {
  int num_stages = 3;
  std::vector<int> k_per_stage{200, 200, 200};
  MaskType mask_type = MaskType::Pooling;
  /// Classes masked by their center cell only in pooling mode. Defaults to
  /// pedestrian (8) and traffic cone (9) in the nuScenes class order.
  std::set<int> small_classes{8, 9};
  int pooling_kernel = 3;

  int total_budget() const;
  void validate() const;
};

/// Splits `total` queries over `stages` as evenly as possible, earlier
/// stages taking the remainder.
std::vector<int> split_budget(int total, int stages);

struct TopKResult {
  std::vector<Candidate> candidates;
  /// Fewer than k unmasked cells with positive score existed.
  bool degenerate = false;
};

/// Global Top-K over every unmasked (class, y, x) cell. Order: score
/// descending, then class, y, x ascending.
TopKResult topk_select(const Heatmap& heatmap, const AccumulatedPositiveMask& apm, int k,
                       int stage);

/// Positive mask for one stage. Box mode requires `boxes` aligned with
/// `cands`. The candidate's own cell is always set.
PositiveMask build_positive_mask(std::span<const Candidate> cands, const HipConfig& cfg,
                                 const BevGridSpec& spec,
                                 std::optional<std::span<const BevBox>> boxes = std::nullopt);

/// Elementwise max. Throws ConfigError on shape mismatch.
AccumulatedPositiveMask accumulate_mask(const AccumulatedPositiveMask& apm,
                                        const PositiveMask& m);

/// S * (1 - M): masked cells become exactly 0, others are copied.
Heatmap apply_mask(const Heatmap& s, const AccumulatedPositiveMask& apm);

/// Supplies the stage heatmap (and predicted boxes in Box mode). Both
/// callbacks see every candidate selected by earlier stages.
struct StageSource {
  std::function<Heatmap(int stage, std::span<const Candidate> prior)> heatmap;
  std::function<std::vector<BevBox>(int stage, std::span<const Candidate> stage_cands)> boxes;
};

struct StageTrace {
  int stage = 0;
  Heatmap masked_heatmap;
  PositiveMask positive_mask;
  AccumulatedPositiveMask accumulated_mask;  // after this stage
  std::size_t num_candidates = 0;
  bool degenerate = false;
};

struct HipResult {
  std::vector<Candidate> candidates;
  AccumulatedPositiveMask final_mask;
  std::vector<StageTrace> traces;
  bool degenerate = false;
};

/// Runs the multi-stage probe: mask the stage heatmap with the accumulated
/// mask of earlier stages, select Top-K, build and accumulate that stage's
/// mask. Errors from the source are rethrown as DataError naming the stage.
HipResult run_hip(const StageSource& source, const HipConfig& cfg, const BevGridSpec& spec,
                  bool keep_traces = true);

/// One candidate per line: {stage, x, y, class_id, score, world_x, world_y}.
void write_candidates_jsonl(std::ostream& out, std::span<const Candidate> cands);
std::vector<Candidate> read_candidates_jsonl(std::istream& in);

}  // namespace hipkit

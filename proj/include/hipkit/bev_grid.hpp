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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hipkit/box.hpp"

namespace hipkit {

/// Discretized bird's-eye-view map. Cell (0, 0) has its lower corner at
/// (origin_x, origin_y); x indexes columns, y indexes rows.
struct BevGridSpec {
  int size_x = 180;
  int size_y = 180;
  int num_classes = 10;
  double cell_size = 0.6;
  double origin_x = -54.0;
  double origin_y = -54.0;

  /// 180 x 180 cells of 0.6 m (0.075 m voxels, 8x downsampled) over
  /// [-54, 54] m, ten categories.
  static BevGridSpec nuscenes() { return {}; }

  std::size_t num_cells() const {
    return static_cast<std::size_t>(size_x) * size_y * num_classes;
  }
  bool contains_cell(int x, int y) const {
    return x >= 0 && y >= 0 && x < size_x && y < size_y;
  }
  double extent_x() const { return size_x * cell_size; }
  double extent_y() const { return size_y * cell_size; }

  void validate() const;
  bool operator==(const BevGridSpec&) const = default;
};

/// Dense per-class score tensor with logical shape [C][Y][X] and values in
/// [0, 1]. Storage is contiguous in CYX order.
class Heatmap {
 public:
  using ChannelArray =
      Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstChannel = Eigen::Map<const ChannelArray>;
  using Channel = Eigen::Map<ChannelArray>;

  explicit Heatmap(const BevGridSpec& spec);
  /// Throws ConfigError on size mismatch and DataError on values outside [0, 1].
  Heatmap(const BevGridSpec& spec, std::vector<float> values);

  const BevGridSpec& spec() const { return spec_; }
  std::span<const float> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * spec_.size_y + y) * spec_.size_x + x;
  }
  float operator()(int c, int y, int x) const { return values_[index(c, y, x)]; }
  float operator[](std::size_t i) const { return values_[i]; }

  /// Row-major Y x X view of one class channel.
  ConstChannel channel(int c) const;

  /// Writes one cell; throws DataError when v is outside [0, 1].
  void set(int c, int y, int x, float v);
  /// values(c, y, x) = max(values(c, y, x), v) for v in [0, 1].
  void max_assign(int c, int y, int x, float v);

  bool operator==(const Heatmap& other) const {
    return spec_ == other.spec_ && values_ == other.values_;
  }

 private:
  BevGridSpec spec_;
  std::vector<float> values_;
};

struct GaussianRenderConfig {
  double min_overlap = 0.1;
  int min_radius_cells = 2;

  void validate() const;
};

/// Fractional grid coordinate of a world point; integer values land on cell
/// corners, so cell (i, j) spans [i, i+1) x [j, j+1).
Eigen::Vector2d world_to_grid(const Eigen::Vector2d& p, const BevGridSpec& spec);
Eigen::Vector2d grid_to_world(const Eigen::Vector2d& g, const BevGridSpec& spec);

/// World coordinate of the center of cell (x, y).
Eigen::Vector2d cell_center(int x, int y, const BevGridSpec& spec);

/// Cell containing a world point, or nullopt when the point is off the map.
std::optional<Eigen::Vector2i> cell_containing(const Eigen::Vector2d& p,
                                               const BevGridSpec& spec);

/// CornerNet radius for a box footprint of `length` x `width` cells such that
/// a corner-shifted box keeps IoU >= min_overlap.
double gaussian_radius(double length_cells, double width_cells, double min_overlap);

/// Integer Gaussian radius (cells) used when rendering `box`.
int render_radius(const BevBox& box, const BevGridSpec& spec,
                  const GaussianRenderConfig& cfg);

/// Max-combines amplitude * exp(-(dx^2 + dy^2) / (2 sigma^2)), sigma =
/// radius / 3, around the cell containing the box center, in the box's
/// class channel. The center cell receives exactly `amplitude`. Returns
/// false (and leaves the map untouched) when the center is off the map or
/// the class is out of range.
bool splat_gaussian(Heatmap& map, const BevBox& box, float amplitude,
                    const GaussianRenderConfig& cfg);

struct RenderResult {
  Heatmap heatmap;
  std::size_t skipped = 0;
};

/// Center-heatmap target for a set of ground-truth boxes.
RenderResult render_gaussian_heatmap(std::span<const BevBox> gts,
                                     const BevGridSpec& spec,
                                     const GaussianRenderConfig& cfg = {});

}  // namespace hipkit

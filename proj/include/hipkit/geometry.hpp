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

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hipkit/bev_grid.hpp"
#include "hipkit/box.hpp"

namespace hipkit {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Polygon = std::vector<Point2<Scalar>>;

/// Signed shoelace area; positive for counter-clockwise vertex order.
template <typename Scalar>
Scalar polygon_area(const Polygon<Scalar>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return Scalar(0);
  Scalar twice = Scalar(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return twice / Scalar(2);
}

/// Sutherland-Hodgman: clips `subject` against the convex, counter-clockwise
/// polygon `clip`. Both inputs must be convex; the result is convex and
/// counter-clockwise (possibly empty).
template <typename Scalar>
Polygon<Scalar> clip_convex(const Polygon<Scalar>& subject,
                            const Polygon<Scalar>& clip) {
  Polygon<Scalar> output = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point2<Scalar> a = clip[e];
    const Point2<Scalar> b = clip[(e + 1) % m];
    const Point2<Scalar> edge = b - a;
    auto side = [&](const Point2<Scalar>& p) {
      const Point2<Scalar> d = p - a;
      return edge.x() * d.y() - edge.y() * d.x();
    };
    Polygon<Scalar> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2<Scalar>& cur = input[i];
      const Point2<Scalar>& prev = input[(i + input.size() - 1) % input.size()];
      const Scalar s_cur = side(cur);
      const Scalar s_prev = side(prev);
      if (s_cur >= Scalar(0)) {
        if (s_prev < Scalar(0)) {
          output.push_back(prev + (cur - prev) * (s_prev / (s_prev - s_cur)));
        }
        output.push_back(cur);
      } else if (s_prev >= Scalar(0)) {
        output.push_back(prev + (cur - prev) * (s_prev / (s_prev - s_cur)));
      }
    }
  }
  return output;
}

/// Corners in counter-clockwise order starting at the rear-right corner.
std::array<Eigen::Vector2d, 4> box_corners(const BevBox& box);

/// True when `p` lies inside or on the boundary of the box footprint.
bool point_in_box(const BevBox& box, const Eigen::Vector2d& p);

double center_distance(const BevBox& a, const BevBox& b);

/// Bird's-eye-view IoU of two rotated rectangles (exact polygon clipping).
/// A zero-area union yields 0.
double rotated_iou_bev(const BevBox& a, const BevBox& b);

struct BoxPoolConfig {
  int grid_h = 7;
  int grid_w = 7;
  double expansion = 1.2;

  void validate() const;
};

/// World-space cell centers of a grid_h x grid_w lattice over the expanded
/// box. Column i of the result is point i; points are row-major in the box
/// frame (rows step across the width, columns along the length).
Eigen::Matrix2Xd box_pool_points(const BevBox& box, const BoxPoolConfig& cfg);

/// Bilinear interpolation on a rows = y, cols = x array. `p` is a fractional
/// cell-index coordinate (x, y): integer values hit stored cells exactly.
/// Points outside [0, cols-1] x [0, rows-1] sample as 0.
template <typename Derived>
double bilinear_sample(const Eigen::DenseBase<Derived>& map, const Eigen::Vector2d& p) {
  const Eigen::Index rows = map.rows();
  const Eigen::Index cols = map.cols();
  const double px = p.x();
  const double py = p.y();
  if (!(px >= 0.0 && py >= 0.0 && px <= double(cols - 1) && py <= double(rows - 1))) {
    return 0.0;
  }
  const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(px));
  const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(py));
  const double fx = px - double(x0);
  const double fy = py - double(y0);
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, cols - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, rows - 1);
  const double v00 = double(map(y0, x0));
  const double v01 = double(map(y0, x1));
  const double v10 = double(map(y1, x0));
  const double v11 = double(map(y1, x1));
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

/// Box pooling over every channel of `map`. World points are converted to
/// cell-index coordinates of the map's own grid. Output is point-major,
/// channel-minor: out[i * C + c].
std::vector<double> box_pool(const Heatmap& map, const BevBox& box,
                             const BoxPoolConfig& cfg = {});

struct DeformSamplingConfig {
  int points_per_scale = 4;
  int num_scales = 3;
  std::vector<int> scale_factors{1, 2, 4};

  void validate() const;
};

/// Average-pools `base` by each scale factor. Level s keeps the origin and
/// multiplies the cell size by scale_factors[s]; partial edge blocks are
/// averaged over the cells they cover.
std::vector<Heatmap> build_pyramid(const Heatmap& base, const DeformSamplingConfig& cfg);

/// Multi-scale sampling around a world reference point. For level s the
/// reference maps to grid / scale_factors[s] (corner convention) and each of
/// the points_per_scale offsets (in level cells) is added before bilinear
/// sampling. `offsets` is scale-major with num_scales * points_per_scale
/// entries. Output layout: [scale][point][channel].
std::vector<double> deform_sample(std::span<const Heatmap> pyramid,
                                  const Eigen::Vector2d& ref_world,
                                  std::span<const Eigen::Vector2d> offsets,
                                  const DeformSamplingConfig& cfg);

}  // namespace hipkit

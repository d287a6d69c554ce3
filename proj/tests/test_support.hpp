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

#include <cmath>
#include <random>
#include <vector>

#include "hipkit/bev_grid.hpp"
#include "hipkit/box.hpp"

namespace hipkit::testing {

// Independent point-in-rotated-rectangle test (local frame projection).
inline bool inside_rect(double px, double py, const BevBox& b) {
  const double dx = px - b.cx;
  const double dy = py - b.cy;
  const double u = dx * std::cos(-b.yaw) - dy * std::sin(-b.yaw);
  const double v = dx * std::sin(-b.yaw) + dy * std::cos(-b.yaw);
  return std::abs(u) <= b.length / 2 && std::abs(v) <= b.width / 2;
}

// IoU by counting pixel centers of an n x n raster over the joint bounding
// square.
inline double raster_iou(const BevBox& a, const BevBox& b, int n) {
  const double ra = 0.5 * std::hypot(a.length, a.width);
  const double rb = 0.5 * std::hypot(b.length, b.width);
  const double x0 = std::min(a.cx - ra, b.cx - rb), x1 = std::max(a.cx + ra, b.cx + rb);
  const double y0 = std::min(a.cy - ra, b.cy - rb), y1 = std::max(a.cy + ra, b.cy + rb);
  const double side = std::max(x1 - x0, y1 - y0);
  long inter = 0, uni = 0;
  for (int i = 0; i < n; ++i) {
    const double py = y0 + (i + 0.5) * side / n;
    for (int j = 0; j < n; ++j) {
      const double px = x0 + (j + 0.5) * side / n;
      const bool ia = inside_rect(px, py, a);
      const bool ib = inside_rect(px, py, b);
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

inline Heatmap random_heatmap(const BevGridSpec& spec, std::mt19937_64& rng,
                              int levels = 0) {
  std::vector<float> v(spec.num_cells());
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_int_distribution<int> q(0, std::max(1, levels));
  for (auto& x : v) x = levels > 0 ? float(q(rng)) / float(levels) : u(rng);
  return Heatmap(spec, std::move(v));
}

inline BevGridSpec small_spec(int x, int y, int c, double cell = 1.0) {
  return BevGridSpec{x, y, c, cell, 0.0, 0.0};
}

}  // namespace hipkit::testing

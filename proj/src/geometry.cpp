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

#include "hipkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hipkit/errors.hpp"

namespace hipkit {

void validate_box(const BevBox& box) {
  if (!(box.length > 0.0) || !(box.width > 0.0)) {
    throw ConfigError("box extents must be positive");
  }
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !std::isfinite(box.yaw)) {
    throw ConfigError("box pose must be finite");
  }
  if (box.score && !(*box.score >= 0.0 && *box.score <= 1.0)) {
    throw ConfigError("box score must lie in [0, 1], got " + std::to_string(*box.score));
  }
}

BevBox make_box(double cx, double cy, double length, double width, double yaw,
                int class_id, std::optional<double> score) {
  BevBox box{cx, cy, length, width, normalize_yaw(yaw), class_id, score};
  validate_box(box);
  return box;
}

std::array<Eigen::Vector2d, 4> box_corners(const BevBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const Eigen::Vector2d center = box.center();
  const Eigen::Vector2d ax(c * hl, s * hl);
  const Eigen::Vector2d ay(-s * hw, c * hw);
  return {center - ax - ay, center + ax - ay, center + ax + ay, center - ax + ay};
}

bool point_in_box(const BevBox& box, const Eigen::Vector2d& p) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Eigen::Vector2d d = p - box.center();
  const double local_x = c * d.x() + s * d.y();
  const double local_y = -s * d.x() + c * d.y();
  return std::abs(local_x) <= 0.5 * box.length && std::abs(local_y) <= 0.5 * box.width;
}

double center_distance(const BevBox& a, const BevBox& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

double rotated_iou_bev(const BevBox& a, const BevBox& b) {
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  const Polygon<double> pa(ca.begin(), ca.end());
  const Polygon<double> pb(cb.begin(), cb.end());
  const double inter = std::max(0.0, polygon_area(clip_convex(pa, pb)));
  const double area_a = a.length * a.width;
  const double area_b = b.length * b.width;
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

void BoxPoolConfig::validate() const {
  if (grid_h < 1 || grid_w < 1) throw ConfigError("box pool grid must be at least 1x1");
  if (!(expansion > 0.0)) throw ConfigError("box pool expansion must be positive");
}

Eigen::Matrix2Xd box_pool_points(const BevBox& box, const BoxPoolConfig& cfg) {
  cfg.validate();
  const double len = box.length * cfg.expansion;
  const double wid = box.width * cfg.expansion;
  Eigen::Matrix2Xd local(2, cfg.grid_h * cfg.grid_w);
  for (int r = 0; r < cfg.grid_h; ++r) {
    for (int col = 0; col < cfg.grid_w; ++col) {
      local(0, r * cfg.grid_w + col) = ((col + 0.5) / cfg.grid_w - 0.5) * len;
      local(1, r * cfg.grid_w + col) = ((r + 0.5) / cfg.grid_h - 0.5) * wid;
    }
  }
  Eigen::Matrix2d rot;
  rot << std::cos(box.yaw), -std::sin(box.yaw), std::sin(box.yaw), std::cos(box.yaw);
  Eigen::Matrix2Xd world = rot * local;
  world.colwise() += box.center();
  return world;
}

std::vector<double> box_pool(const Heatmap& map, const BevBox& box,
                             const BoxPoolConfig& cfg) {
  const Eigen::Matrix2Xd pts = box_pool_points(box, cfg);
  const int channels = map.spec().num_classes;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(pts.cols()) * channels);
  const Eigen::Vector2d half(0.5, 0.5);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Eigen::Vector2d g = world_to_grid(pts.col(i), map.spec()) - half;
    for (int c = 0; c < channels; ++c) out.push_back(bilinear_sample(map.channel(c), g));
  }
  return out;
}

void DeformSamplingConfig::validate() const {
  if (points_per_scale < 1 || num_scales < 1) {
    throw ConfigError("deformable sampling needs at least one point and one scale");
  }
  if (static_cast<int>(scale_factors.size()) != num_scales) {
    throw ConfigError("scale_factors length must equal num_scales");
  }
  if (scale_factors.front() != 1) throw ConfigError("first scale factor must be 1");
  for (std::size_t i = 1; i < scale_factors.size(); ++i) {
    if (scale_factors[i] <= scale_factors[i - 1]) {
      throw ConfigError("scale factors must be strictly increasing");
    }
  }
}

std::vector<Heatmap> build_pyramid(const Heatmap& base, const DeformSamplingConfig& cfg) {
  cfg.validate();
  const BevGridSpec& spec = base.spec();
  std::vector<Heatmap> levels;
  levels.reserve(cfg.scale_factors.size());
  for (int f : cfg.scale_factors) {
    BevGridSpec ls = spec;
    ls.size_x = (spec.size_x + f - 1) / f;
    ls.size_y = (spec.size_y + f - 1) / f;
    ls.cell_size = spec.cell_size * f;
    Heatmap level(ls);
    for (int c = 0; c < spec.num_classes; ++c) {
      const auto src = base.channel(c);
      for (int y = 0; y < ls.size_y; ++y) {
        for (int x = 0; x < ls.size_x; ++x) {
          const int h = std::min(f, spec.size_y - y * f);
          const int w = std::min(f, spec.size_x - x * f);
          const double mean = src.block(y * f, x * f, h, w).cast<double>().mean();
          level.set(c, y, x, static_cast<float>(std::clamp(mean, 0.0, 1.0)));
        }
      }
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

std::vector<double> deform_sample(std::span<const Heatmap> pyramid,
                                  const Eigen::Vector2d& ref_world,
                                  std::span<const Eigen::Vector2d> offsets,
                                  const DeformSamplingConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(pyramid.size()) != cfg.num_scales) {
    throw ConfigError("pyramid depth " + std::to_string(pyramid.size()) +
                      " does not match num_scales " + std::to_string(cfg.num_scales));
  }
  const std::size_t expected = static_cast<std::size_t>(cfg.num_scales) * cfg.points_per_scale;
  if (offsets.size() != expected) {
    throw ConfigError("expected " + std::to_string(expected) + " sampling offsets");
  }
  const int channels = pyramid.front().spec().num_classes;
  std::vector<double> out;
  out.reserve(expected * channels);
  for (int s = 0; s < cfg.num_scales; ++s) {
    const Heatmap& level = pyramid[s];
    if (level.spec().num_classes != channels) throw ConfigError("pyramid levels disagree on classes");
    const Eigen::Vector2d ref = world_to_grid(ref_world, level.spec()) - Eigen::Vector2d(0.5, 0.5);
    for (int k = 0; k < cfg.points_per_scale; ++k) {
      const Eigen::Vector2d p = ref + offsets[s * cfg.points_per_scale + k];
      for (int c = 0; c < channels; ++c) out.push_back(bilinear_sample(level.channel(c), p));
    }
  }
  return out;
}

}  // namespace hipkit

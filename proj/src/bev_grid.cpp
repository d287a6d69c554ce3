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

#include "hipkit/bev_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hipkit/errors.hpp"

namespace hipkit {

void BevGridSpec::validate() const {
  if (size_x < 1 || size_y < 1 || num_classes < 1) {
    throw ConfigError("grid sizes and class count must be at least 1");
  }
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ConfigError("cell_size must be positive");
  }
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw ConfigError("grid origin must be finite");
  }
}

Heatmap::Heatmap(const BevGridSpec& spec) : spec_(spec) {
  spec_.validate();
  values_.assign(spec_.num_cells(), 0.0f);
}

Heatmap::Heatmap(const BevGridSpec& spec, std::vector<float> values)
    : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.num_cells()) {
    throw ConfigError("heatmap holds " + std::to_string(values_.size()) +
                      " values, spec requires " + std::to_string(spec_.num_cells()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0f && values_[i] <= 1.0f)) {
      throw DataError("heatmap value at flat index " + std::to_string(i) +
                      " is outside [0, 1]");
    }
  }
}

Heatmap::ConstChannel Heatmap::channel(int c) const {
  return ConstChannel(values_.data() + index(c, 0, 0), spec_.size_y, spec_.size_x);
}

void Heatmap::set(int c, int y, int x, float v) {
  if (!(v >= 0.0f && v <= 1.0f)) throw DataError("heatmap value outside [0, 1]");
  values_[index(c, y, x)] = v;
}

void Heatmap::max_assign(int c, int y, int x, float v) {
  float& cell = values_[index(c, y, x)];
  if (v > cell) {
    if (v > 1.0f) throw DataError("heatmap value outside [0, 1]");
    cell = v;
  }
}

void GaussianRenderConfig::validate() const {
  if (!(min_overlap > 0.0 && min_overlap < 1.0)) {
    throw ConfigError("min_overlap must lie in (0, 1)");
  }
  if (min_radius_cells < 1) throw ConfigError("min_radius_cells must be at least 1");
}

Eigen::Vector2d world_to_grid(const Eigen::Vector2d& p, const BevGridSpec& spec) {
  return {(p.x() - spec.origin_x) / spec.cell_size, (p.y() - spec.origin_y) / spec.cell_size};
}

Eigen::Vector2d grid_to_world(const Eigen::Vector2d& g, const BevGridSpec& spec) {
  return {g.x() * spec.cell_size + spec.origin_x, g.y() * spec.cell_size + spec.origin_y};
}

Eigen::Vector2d cell_center(int x, int y, const BevGridSpec& spec) {
  return grid_to_world(Eigen::Vector2d(x + 0.5, y + 0.5), spec);
}

std::optional<Eigen::Vector2i> cell_containing(const Eigen::Vector2d& p,
                                               const BevGridSpec& spec) {
  const Eigen::Vector2d g = world_to_grid(p, spec);
  const double fx = std::floor(g.x());
  const double fy = std::floor(g.y());
  if (!(fx >= 0.0 && fy >= 0.0 && fx < spec.size_x && fy < spec.size_y)) return std::nullopt;
  return Eigen::Vector2i(static_cast<int>(fx), static_cast<int>(fy));
}

double gaussian_radius(double length_cells, double width_cells, double min_overlap) {
  const double h = length_cells;
  const double w = width_cells;
  const double mo = min_overlap;

  const double b1 = h + w;
  const double c1 = w * h * (1.0 - mo) / (1.0 + mo);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  const double a2 = 4.0;
  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - mo) * w * h;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / 2.0;

  const double a3 = 4.0 * mo;
  const double b3 = -2.0 * mo * (h + w);
  const double c3 = (mo - 1.0) * w * h;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0;

  return std::min({r1, r2, r3});
}

int render_radius(const BevBox& box, const BevGridSpec& spec,
                  const GaussianRenderConfig& cfg) {
  const double r = gaussian_radius(box.length / spec.cell_size, box.width / spec.cell_size,
                                   cfg.min_overlap);
  return std::max(cfg.min_radius_cells, static_cast<int>(r));
}

bool splat_gaussian(Heatmap& map, const BevBox& box, float amplitude,
                    const GaussianRenderConfig& cfg) {
  const BevGridSpec& spec = map.spec();
  if (box.class_id < 0 || box.class_id >= spec.num_classes) return false;
  const auto cell = cell_containing(box.center(), spec);
  if (!cell) return false;
  const int radius = render_radius(box, spec, cfg);
  const double sigma = radius / 3.0;
  const double denom = 2.0 * sigma * sigma;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cell->x() + dx;
      const int y = cell->y() + dy;
      if (!spec.contains_cell(x, y)) continue;
      const float v = (dx == 0 && dy == 0)
                          ? amplitude
                          : static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) / denom));
      map.max_assign(box.class_id, y, x, v);
    }
  }
  return true;
}

RenderResult render_gaussian_heatmap(std::span<const BevBox> gts, const BevGridSpec& spec,
                                     const GaussianRenderConfig& cfg) {
  cfg.validate();
  RenderResult result{Heatmap(spec), 0};
  for (const BevBox& gt : gts) {
    if (!splat_gaussian(result.heatmap, gt, 1.0f, cfg)) ++result.skipped;
  }
  return result;
}

}  // namespace hipkit

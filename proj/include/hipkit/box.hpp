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
#include <numbers>
#include <optional>

#include <Eigen/Core>

namespace hipkit {

/// Wraps an angle into (-pi, pi].
inline double normalize_yaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(yaw, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

/// Rotated ground-plane box. `length` runs along the heading axis, `width`
/// across it. Scores are mandatory for predictions and optional for ground
/// truth.
struct BevBox {
  double cx = 0.0;
  double cy = 0.0;
  double length = 1.0;
  double width = 1.0;
  double yaw = 0.0;
  int class_id = 0;
  std::optional<double> score;

  Eigen::Vector2d center() const { return {cx, cy}; }
  double score_or(double fallback) const { return score.value_or(fallback); }
};

/// Validating constructor: rejects non-positive extents and scores outside
/// [0, 1], and normalizes the yaw. Throws ConfigError.
BevBox make_box(double cx, double cy, double length, double width, double yaw,
                int class_id, std::optional<double> score = std::nullopt);

/// Throws ConfigError when `box` breaks a BevBox invariant.
void validate_box(const BevBox& box);

}  // namespace hipkit

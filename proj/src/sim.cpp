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

#include "hipkit/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <thread>

#include "hipkit/errors.hpp"
#include "hipkit/geometry.hpp"

namespace hipkit {

double SceneRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int SceneRng::uniform_int(int lo, int hi) {
  const double span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
  const int v = lo + static_cast<int>(std::floor(uniform() * span));
  return std::min(v, hi);
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void SceneParams::validate() const {
  spec.validate();
  if (min_objects < 0 || max_objects < min_objects) {
    throw ConfigError("object count range must satisfy 0 <= min <= max");
  }
  const auto nc = static_cast<std::size_t>(spec.num_classes);
  if (class_mix.size() != nc || size_table.size() != nc) {
    throw ConfigError("class_mix and size_table need one entry per grid class");
  }
  if (!class_names.empty() && class_names.size() != nc) {
    throw ConfigError("class_names needs one entry per grid class");
  }
  double total = 0.0;
  for (double p : class_mix) {
    if (!(p >= 0.0)) throw ConfigError("class probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("class_mix must sum to 1");
  for (const ClassSize& s : size_table) {
    if (!(s.length > 0.0 && s.width > 0.0) || !(s.jitter >= 0.0) ||
        !(s.jitter < std::min(s.length, s.width))) {
      throw ConfigError("class sizes must be positive with jitter below the smaller extent");
    }
  }
  if (!(min_same_class_separation > 0.0)) throw ConfigError("separation must be positive");
  if (!(clutter_min_gt_distance >= 0.0)) {
    throw ConfigError("clutter_min_gt_distance must be non-negative");
  }
  if (max_placement_attempts < 1) throw ConfigError("max_placement_attempts must be >= 1");
}

void DetectabilityModel::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(easy_fraction) || !unit(easy_amplitude)) {
    throw ConfigError("easy_fraction and easy_amplitude must lie in [0, 1]");
  }
  if (!(hard_amplitude_min > 0.0 && hard_amplitude_min <= hard_amplitude_max &&
        hard_amplitude_max < 1.0)) {
    throw ConfigError("hard amplitude range must lie inside (0, 1)");
  }
  if (!(hard_amplitude_max < easy_amplitude)) {
    throw ConfigError("hard amplitudes must stay below easy_amplitude");
  }
  if (clutter_peaks < 0) throw ConfigError("clutter_peaks must be non-negative");
  if (!(unit(clutter_amplitude_min) && unit(clutter_amplitude_max) &&
        clutter_amplitude_min <= clutter_amplitude_max)) {
    throw ConfigError("clutter amplitude range must lie inside [0, 1]");
  }
  if (!(stage_gain > 0.0)) throw ConfigError("stage_gain must be positive");
}

bool SyntheticScene::operator==(const SyntheticScene& o) const {
  auto same_box = [](const BevBox& a, const BevBox& b) {
    return a.cx == b.cx && a.cy == b.cy && a.length == b.length && a.width == b.width &&
           a.yaw == b.yaw && a.class_id == b.class_id && a.score == b.score;
  };
  auto same_peak = [](const ClutterPeak& a, const ClutterPeak& b) {
    return a.x == b.x && a.y == b.y && a.class_id == b.class_id && a.amplitude == b.amplitude;
  };
  return std::equal(gts.begin(), gts.end(), o.gts.begin(), o.gts.end(), same_box) &&
         amplitudes == o.amplitudes &&
         std::equal(clutter.begin(), clutter.end(), o.clutter.begin(), o.clutter.end(),
                    same_peak);
}

SyntheticScene generate_scene(const SceneParams& params, const DetectabilityModel& model) {
  params.validate();
  model.validate();
  const BevGridSpec& spec = params.spec;
  SceneRng rng(params.rng_seed);
  SyntheticScene scene;

  const int n = rng.uniform_int(params.min_objects, params.max_objects);
  const double x_lo = spec.origin_x + spec.cell_size;
  const double x_hi = spec.origin_x + spec.extent_x() - spec.cell_size;
  const double y_lo = spec.origin_y + spec.cell_size;
  const double y_hi = spec.origin_y + spec.extent_y() - spec.cell_size;

  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int cls = spec.num_classes - 1;
    double cum = 0.0;
    for (int c = 0; c < spec.num_classes; ++c) {
      cum += params.class_mix[c];
      if (u < cum) {
        cls = c;
        break;
      }
    }
    const ClassSize& size = params.size_table[cls];
    const double length = size.length + rng.uniform(-size.jitter, size.jitter);
    const double width = size.width + rng.uniform(-size.jitter, size.jitter);
    const double yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
    const bool easy = rng.uniform() < model.easy_fraction;
    const double amp =
        easy ? model.easy_amplitude : rng.uniform(model.hard_amplitude_min, model.hard_amplitude_max);

    bool placed = false;
    for (int attempt = 0; attempt < params.max_placement_attempts && !placed; ++attempt) {
      const double cx = rng.uniform(x_lo, x_hi);
      const double cy = rng.uniform(y_lo, y_hi);
      const bool clear = std::none_of(scene.gts.begin(), scene.gts.end(), [&](const BevBox& g) {
        return g.class_id == cls &&
               std::hypot(g.cx - cx, g.cy - cy) < params.min_same_class_separation;
      });
      if (clear) {
        scene.gts.push_back(BevBox{cx, cy, length, width, yaw, cls, std::nullopt});
        scene.amplitudes.push_back(static_cast<float>(amp));
        placed = true;
      }
    }
    if (!placed) {
      throw ConfigError("could not place object " + std::to_string(i) + " of class " +
                        std::to_string(cls) + " after " +
                        std::to_string(params.max_placement_attempts) +
                        " attempts; object density is infeasible for the separation");
    }
  }

  for (int j = 0; j < model.clutter_peaks; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < params.max_placement_attempts && !placed; ++attempt) {
      ClutterPeak peak;
      peak.x = rng.uniform_int(0, spec.size_x - 1);
      peak.y = rng.uniform_int(0, spec.size_y - 1);
      peak.class_id = rng.uniform_int(0, spec.num_classes - 1);
      const Eigen::Vector2d at = cell_center(peak.x, peak.y, spec);
      const bool clear = std::none_of(scene.gts.begin(), scene.gts.end(), [&](const BevBox& g) {
        return g.class_id == peak.class_id &&
               (at - g.center()).norm() < params.clutter_min_gt_distance;
      });
      const double amp = rng.uniform(model.clutter_amplitude_min, model.clutter_amplitude_max);
      if (clear) {
        peak.amplitude = static_cast<float>(amp);
        scene.clutter.push_back(peak);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("could not place clutter peak " + std::to_string(j));
  }
  return scene;
}

Heatmap oracle_stage_heatmap(const SyntheticScene& scene, int stage,
                             const std::set<std::size_t>& detected_so_far,
                             const DetectabilityModel& model, const BevGridSpec& spec,
                             const GaussianRenderConfig& render) {
  render.validate();
  Heatmap map(spec);
  const double gain = std::pow(model.stage_gain, stage);
  for (std::size_t i = 0; i < scene.gts.size(); ++i) {
    double amp = scene.amplitudes[i];
    if (!detected_so_far.contains(i)) amp *= gain;
    splat_gaussian(map, scene.gts[i], static_cast<float>(std::clamp(amp, 0.0, 1.0)), render);
  }
  for (const ClutterPeak& p : scene.clutter) {
    if (spec.contains_cell(p.x, p.y) && p.class_id >= 0 && p.class_id < spec.num_classes) {
      map.max_assign(p.class_id, p.y, p.x, std::clamp(p.amplitude, 0.0f, 1.0f));
    }
  }
  return map;
}

void ExperimentConfig::validate() const {
  if (num_scenes < 1) throw ConfigError("num_scenes must be at least 1");
  scene.validate();
  model.validate();
  hip.validate();
  baseline.validate();
  recall.validate();
  render.validate();
  detect_match.validate();
  if (hip.total_budget() != baseline.total_budget()) {
    throw ConfigError("unfair comparison: HIP arm budget " + std::to_string(hip.total_budget()) +
                      " differs from baseline budget " +
                      std::to_string(baseline.total_budget()));
  }
}

std::uint64_t scene_seed(std::uint64_t base_seed, int index) {
  return mix_seed(base_seed + static_cast<std::uint64_t>(index));
}

namespace {

std::vector<Candidate> run_arm(const ExperimentConfig& cfg, const SyntheticScene& scene,
                               const HipConfig& arm) {
  const BevGridSpec& spec = cfg.scene.spec;
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < scene.gts.size(); ++i) all.insert(i);

  StageSource source;
  source.heatmap = [&](int stage, std::span<const Candidate> prior) {
    std::set<std::size_t> detected;
    if (cfg.model.stage_gain != 1.0 && !prior.empty()) {
      const auto boxes = candidate_boxes(prior);
      detected = classify_stage(boxes, scene.gts, all, cfg.detect_match, stage).tp_gt;
    }
    return oracle_stage_heatmap(scene, stage, detected, cfg.model, spec, cfg.render);
  };
  source.boxes = [&](int, std::span<const Candidate> cands) {
    std::vector<BevBox> boxes;
    boxes.reserve(cands.size());
    for (const Candidate& c : cands) {
      const ClassSize& s = cfg.scene.size_table[static_cast<std::size_t>(c.class_id)];
      boxes.push_back(BevBox{c.world_center.x(), c.world_center.y(), s.length, s.width, 0.0,
                             c.class_id, static_cast<double>(c.score)});
    }
    return boxes;
  };
  return run_hip(source, arm, spec, /*keep_traces=*/false).candidates;
}

}  // namespace

SceneOutcome run_scene(const ExperimentConfig& cfg, int index) {
  SceneOutcome out;
  out.index = index;
  out.seed = scene_seed(cfg.scene.rng_seed, index);
  SceneParams params = cfg.scene;
  params.rng_seed = out.seed;
  out.scene = generate_scene(params, cfg.model);

  out.hip_candidates = run_arm(cfg, out.scene, cfg.hip);
  out.baseline_candidates = run_arm(cfg, out.scene, cfg.baseline);

  const auto hip_boxes = candidate_boxes(out.hip_candidates);
  const auto base_boxes = candidate_boxes(out.baseline_candidates);
  out.hip = average_recall(hip_boxes, out.scene.gts, cfg.recall);
  out.baseline = average_recall(base_boxes, out.scene.gts, cfg.recall);
  out.delta = out.hip.mean_recall - out.baseline.mean_recall;

  for (int k = 0; k < cfg.hip.num_stages; ++k) {
    std::vector<BevBox> upto;
    for (std::size_t i = 0; i < out.hip_candidates.size(); ++i) {
      if (out.hip_candidates[i].stage <= k) upto.push_back(hip_boxes[i]);
    }
    out.hip_stage_mar.push_back(average_recall(upto, out.scene.gts, cfg.recall).mean_recall);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  ExperimentResult result;
  result.scenes.resize(static_cast<std::size_t>(cfg.num_scenes));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int i = next++; i < cfg.num_scenes; i = next++) {
      try {
        result.scenes[static_cast<std::size_t>(i)] = run_scene(cfg, i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, cfg.num_scenes);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  // Merge in scene order so floating-point sums do not depend on scheduling.
  RecallAccumulator hip_acc(cfg.recall);
  RecallAccumulator base_acc(cfg.recall);
  double sum_hip = 0.0, sum_base = 0.0, sum_delta = 0.0;
  std::size_t nonneg = 0;
  for (const SceneOutcome& s : result.scenes) {
    hip_acc.add(s.hip);
    base_acc.add(s.baseline);
    sum_hip += s.hip.mean_recall;
    sum_base += s.baseline.mean_recall;
    sum_delta += s.delta;
    if (s.delta >= 0.0) ++nonneg;
  }
  const double n = static_cast<double>(cfg.num_scenes);
  result.hip_pooled = hip_acc.report();
  result.baseline_pooled = base_acc.report();
  result.mean_mar_hip = sum_hip / n;
  result.mean_mar_baseline = sum_base / n;
  result.mean_delta = sum_delta / n;
  result.fraction_nonnegative = static_cast<double>(nonneg) / n;
  return result;
}

}  // namespace hipkit

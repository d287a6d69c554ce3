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
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hipkit/assignment.hpp"
#include "hipkit/bev_grid.hpp"
#include "hipkit/box.hpp"
#include "hipkit/hip_engine.hpp"
#include "hipkit/metrics.hpp"

namespace hipkit {

/// mt19937_64 with platform-independent real and integer draws (the std
/// distributions are implementation-defined).
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive per-scene seeds.
std::uint64_t mix_seed(std::uint64_t x);

struct ClassSize {
  double length = 1.0;
  double width = 1.0;
  double jitter = 0.0;  // uniform +/- jitter in meters
};

struct SceneParams {
  std::uint64_t rng_seed = 0;
  int min_objects = 20;
  int max_objects = 40;
  std::vector<double> class_mix{0.5, 0.3, 0.2};
  std::vector<std::string> class_names{"car", "pedestrian", "traffic_cone"};
  std::vector<ClassSize> size_table{{4.6, 1.9, 0.3}, {0.7, 0.7, 0.1}, {0.4, 0.4, 0.05}};
  BevGridSpec spec{180, 180, 3, 0.6, -54.0, -54.0};
  double min_same_class_separation = 2.0;
  /// Clutter peaks are kept at least this far from same-class ground truth.
  double clutter_min_gt_distance = 4.0;
  int max_placement_attempts = 10000;

  void validate() const;
};

struct DetectabilityModel {
  double easy_fraction = 0.5;
  double easy_amplitude = 1.0;
  double hard_amplitude_min = 0.2;
  double hard_amplitude_max = 0.5;
  int clutter_peaks = 0;
  double clutter_amplitude_min = 0.3;
  double clutter_amplitude_max = 0.8;
  /// Per-stage multiplier for objects not yet detected.
  double stage_gain = 1.0;

  void validate() const;
};

struct ClutterPeak {
  int x = 0;
  int y = 0;
  int class_id = 0;
  float amplitude = 0.0f;
};

struct SyntheticScene {
  std::vector<BevBox> gts;
  std::vector<float> amplitudes;  // one per ground truth
  std::vector<ClutterPeak> clutter;

  bool operator==(const SyntheticScene& o) const;
};

/// Deterministic in params.rng_seed. Throws ConfigError when a placement
/// cannot satisfy the separation after max_placement_attempts draws.
SyntheticScene generate_scene(const SceneParams& params, const DetectabilityModel& model);

/// Oracle heatmap for one stage: each ground truth Gaussian scaled by its
/// amplitude (times stage_gain^stage when not yet detected), clutter peaks
/// as single cells, everything max-combined and clamped to [0, 1].
Heatmap oracle_stage_heatmap(const SyntheticScene& scene, int stage,
                             const std::set<std::size_t>& detected_so_far,
                             const DetectabilityModel& model, const BevGridSpec& spec,
                             const GaussianRenderConfig& render = {});

struct ExperimentConfig {
  int num_scenes = 200;
  SceneParams scene;
  DetectabilityModel model;
  HipConfig hip{3, {200, 200, 200}, MaskType::Pooling, {1, 2}, 3};
  HipConfig baseline{1, {600}, MaskType::Point, {}, 3};
  RecallConfig recall;
  GaussianRenderConfig render;
  /// Decides which objects count as detected between stages (gain knob).
  MatchConfig detect_match{MatchMetric::CenterDistance, 0.5};

  void validate() const;
};

struct SceneOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  SyntheticScene scene;
  std::vector<Candidate> hip_candidates;
  std::vector<Candidate> baseline_candidates;
  RecallReport hip;
  RecallReport baseline;
  /// mAR of HIP candidates from stages 0..k, per k.
  std::vector<double> hip_stage_mar;
  double delta = 0.0;  // hip.mAR - baseline.mAR
};

struct ExperimentResult {
  std::vector<SceneOutcome> scenes;
  RecallReport hip_pooled;
  RecallReport baseline_pooled;
  double mean_mar_hip = 0.0;
  double mean_mar_baseline = 0.0;
  double mean_delta = 0.0;
  double fraction_nonnegative = 0.0;
};

/// Seed of scene `index` for an experiment rooted at `base_seed`.
std::uint64_t scene_seed(std::uint64_t base_seed, int index);

/// Runs one scene through both arms.
SceneOutcome run_scene(const ExperimentConfig& cfg, int index);

/// Runs every scene on `jobs` worker threads; results are identical for any
/// job count. Throws ConfigError when the arms' total budgets differ.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

}  // namespace hipkit

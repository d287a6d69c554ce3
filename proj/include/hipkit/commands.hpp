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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hipkit/hip_engine.hpp"
#include "hipkit/metrics.hpp"
#include "hipkit/sim.hpp"

namespace hipkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

enum class KeyType { Int, Number, Bool, String, IntList, NumberList, StringList, SizeTable };

struct ConfigKey {
  const char* name;
  KeyType type;
  const char* help;
};

/// Every key accepted in an experiment config file. Each one is also a
/// `simulate` flag spelled with dashes (num_stages -> --num-stages).
const std::vector<ConfigKey>& experiment_schema();

/// Converts a flag value to JSON according to the key's type. Lists accept
/// "a,b,c" or JSON; size tables accept "l:w:j,l:w:j" or JSON.
nlohmann::json parse_flag_value(const ConfigKey& key, const std::string& text);

/// Builds an experiment from a flat config object. Unknown keys and type
/// errors throw ConfigError naming the key.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Reads the config file (if any), applies `overrides` (key -> flag text) on
/// top, and builds the experiment.
ExperimentConfig load_experiment_config(const std::optional<std::filesystem::path>& path,
                                        const std::map<std::string, std::string>& overrides = {});

struct SimulateOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir;
  int jobs = 1;
  std::map<std::string, std::string> overrides;
};

/// Writes report.csv, report.json, recall_curve.svg, scenes/, candidates/
/// and the version.json sidecar into out_dir.
ExperimentResult cmd_simulate(const SimulateOptions& opts);

struct ProbeOptions {
  std::vector<std::filesystem::path> heatmaps;  // one per stage
  std::vector<int> k{200};                      // one value, or one per stage
  MaskType mask_type = MaskType::Point;
  std::vector<int> small_classes{8, 9};
  int pooling_kernel = 3;
  /// Box mode: axis-aligned footprint predicted for every candidate.
  double box_length = 4.0;
  double box_width = 2.0;
  std::filesystem::path out_dir;
};

/// Writes candidates.jsonl and masks/stage_<k>_{positive,accumulated}.json.
HipResult cmd_probe(const ProbeOptions& opts);

struct AuditOptions {
  std::filesystem::path dump;
  std::optional<std::filesystem::path> reference;
  RecallConfig recall;
  std::filesystem::path out_dir;
  int jobs = 1;
};

struct AuditResult {
  RecallReport pooled;
  std::optional<RecallReport> reference;
  nlohmann::ordered_json fn_inventory;
};

/// Writes recall.csv, recall.json, fn_inventory.json and classwise.svg.
AuditResult cmd_audit(const AuditOptions& opts);

struct ReportOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  std::string title = "Average recall vs center distance";
};

/// Redraws recall.csv and recall_curve.svg from report JSON files written by
/// simulate or audit.
void cmd_report(const ReportOptions& opts);

/// Full command-line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hipkit::cli

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
#include <string>
#include <vector>

#include <json.hpp>

#include "hipkit/box.hpp"
#include "hipkit/metrics.hpp"
#include "hipkit/sim.hpp"

namespace hipkit {

/// Shortest decimal string that round-trips the double.
std::string format_number(double v);

/// Display name of a class id; falls back to the numeric id.
std::string class_label(int class_id, const std::vector<std::string>& names);

nlohmann::ordered_json report_to_json(const RecallReport& report,
                                      const std::vector<std::string>& class_names = {});
RecallReport report_from_json(const nlohmann::json& j);

inline constexpr const char* kRecallCsvHeader = "scope,class,threshold,recall,num_gt,num_matched";

/// CSV rows (no header): one pooled row per threshold with class "all",
/// followed by per-class rows.
void write_report_csv_rows(std::ostream& out, const std::string& scope,
                           const RecallReport& report,
                           const std::vector<std::string>& class_names = {});

nlohmann::ordered_json scene_to_json(const SyntheticScene& scene);
SyntheticScene scene_from_json(const nlohmann::json& j);

struct DumpScene {
  std::string scene_id;
  std::vector<BevBox> predictions;
  std::vector<BevBox> ground_truth;
};

struct DetectionDump {
  std::vector<DumpScene> scenes;
  std::vector<std::string> class_names;  // optional
};

/// {"class_names": [...]?, "scenes": [{"scene_id", "predictions": [box],
/// "ground_truth": [box]}]}. Throws DataError naming the scene and record.
DetectionDump parse_detection_dump(const nlohmann::json& j);
DetectionDump read_detection_dump(const std::filesystem::path& path);
nlohmann::ordered_json dump_to_json(const DetectionDump& dump);

struct CurveSeries {
  std::string label;
  std::vector<double> thresholds;
  std::vector<double> recall;
};

/// Recall-vs-threshold line chart.
std::string recall_curve_svg(const std::string& title, const std::vector<CurveSeries>& series);

struct BarGroup {
  std::string label;          // class
  std::vector<double> values;  // one bar per series, in percent
};

/// Grouped bar chart; `series` names the bars within each group.
std::string grouped_bar_svg(const std::string& title, const std::vector<std::string>& series,
                            const std::vector<BarGroup>& groups);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hipkit

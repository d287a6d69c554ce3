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

#include "hipkit/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hipkit/errors.hpp"
#include "hipkit/heatmap_io.hpp"
#include "hipkit/json_io.hpp"
#include "hipkit/report_io.hpp"

namespace hipkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<ConfigKey>& experiment_schema() {
  static const std::vector<ConfigKey> schema = {
      {"scenes", KeyType::Int, "number of seeded scenes"},
      {"seed", KeyType::Int, "base seed; scene i uses a mix of seed + i"},
      {"num_objects_min", KeyType::Int, "minimum objects per scene"},
      {"num_objects_max", KeyType::Int, "maximum objects per scene"},
      {"class_names", KeyType::StringList, "class display names"},
      {"class_mix", KeyType::NumberList, "per-class sampling probabilities (sum to 1)"},
      {"class_sizes", KeyType::SizeTable, "per-class length:width:jitter in meters"},
      {"grid_size_x", KeyType::Int, "BEV grid columns"},
      {"grid_size_y", KeyType::Int, "BEV grid rows"},
      {"cell_size", KeyType::Number, "meters per cell"},
      {"origin_x", KeyType::Number, "world x of the grid corner"},
      {"origin_y", KeyType::Number, "world y of the grid corner"},
      {"min_separation", KeyType::Number, "minimum same-class center distance (m)"},
      {"clutter_min_gt_distance", KeyType::Number,
       "minimum distance from clutter to same-class objects (m)"},
      {"max_placement_attempts", KeyType::Int, "rejection-sampling attempts per object"},
      {"easy_fraction", KeyType::Number, "probability an object is easy"},
      {"easy_amplitude", KeyType::Number, "heatmap peak of easy objects"},
      {"hard_amplitude_min", KeyType::Number, "lower bound of hard-object peaks"},
      {"hard_amplitude_max", KeyType::Number, "upper bound of hard-object peaks"},
      {"clutter_peaks", KeyType::Int, "single-cell false-positive peaks per scene"},
      {"clutter_amplitude_min", KeyType::Number, "lower bound of clutter peaks"},
      {"clutter_amplitude_max", KeyType::Number, "upper bound of clutter peaks"},
      {"stage_gain", KeyType::Number, "per-stage gain for undetected objects"},
      {"num_stages", KeyType::Int, "HIP stages"},
      {"k_per_stage", KeyType::IntList, "queries per HIP stage (default: even split)"},
      {"mask_type", KeyType::String, "point | pooling | box"},
      {"small_classes", KeyType::IntList, "classes masked by center cell in pooling mode"},
      {"pooling_kernel", KeyType::Int, "pooling mask kernel (cells, odd)"},
      {"baseline_k", KeyType::Int, "single-stage baseline budget"},
      {"thresholds", KeyType::NumberList, "recall center-distance thresholds (m)"},
      {"class_agnostic", KeyType::Bool, "ignore classes when matching for recall"},
      {"min_overlap", KeyType::Number, "Gaussian radius overlap parameter"},
      {"min_radius_cells", KeyType::Int, "minimum Gaussian radius (cells)"},
      {"detect_eta", KeyType::Number, "center distance counting an object detected (m)"},
  };
  return schema;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const ConfigKey& k : experiment_schema()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": '" + s + "' is not a number");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": '" + s + "' is not an integer");
  }
  return v;
}

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

ordered_json experiment_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["scenes"] = cfg.num_scenes;
  j["seed"] = cfg.scene.rng_seed;
  j["num_objects_min"] = cfg.scene.min_objects;
  j["num_objects_max"] = cfg.scene.max_objects;
  j["class_names"] = cfg.scene.class_names;
  j["class_mix"] = cfg.scene.class_mix;
  ordered_json sizes = ordered_json::array();
  for (const ClassSize& s : cfg.scene.size_table) sizes.push_back({s.length, s.width, s.jitter});
  j["class_sizes"] = sizes;
  j["grid_size_x"] = cfg.scene.spec.size_x;
  j["grid_size_y"] = cfg.scene.spec.size_y;
  j["cell_size"] = cfg.scene.spec.cell_size;
  j["origin_x"] = cfg.scene.spec.origin_x;
  j["origin_y"] = cfg.scene.spec.origin_y;
  j["min_separation"] = cfg.scene.min_same_class_separation;
  j["clutter_min_gt_distance"] = cfg.scene.clutter_min_gt_distance;
  j["max_placement_attempts"] = cfg.scene.max_placement_attempts;
  j["easy_fraction"] = cfg.model.easy_fraction;
  j["easy_amplitude"] = cfg.model.easy_amplitude;
  j["hard_amplitude_min"] = cfg.model.hard_amplitude_min;
  j["hard_amplitude_max"] = cfg.model.hard_amplitude_max;
  j["clutter_peaks"] = cfg.model.clutter_peaks;
  j["clutter_amplitude_min"] = cfg.model.clutter_amplitude_min;
  j["clutter_amplitude_max"] = cfg.model.clutter_amplitude_max;
  j["stage_gain"] = cfg.model.stage_gain;
  j["num_stages"] = cfg.hip.num_stages;
  j["k_per_stage"] = cfg.hip.k_per_stage;
  j["mask_type"] = to_string(cfg.hip.mask_type);
  j["small_classes"] = std::vector<int>(cfg.hip.small_classes.begin(), cfg.hip.small_classes.end());
  j["pooling_kernel"] = cfg.hip.pooling_kernel;
  j["baseline_k"] = cfg.baseline.total_budget();
  j["thresholds"] = cfg.recall.thresholds;
  j["class_agnostic"] = cfg.recall.class_agnostic;
  j["min_overlap"] = cfg.render.min_overlap;
  j["min_radius_cells"] = cfg.render.min_radius_cells;
  j["detect_eta"] = cfg.detect_match.eta;
  return j;
}

void write_mask(const fs::path& header, const std::span<const std::uint8_t> bits,
                const BevGridSpec& spec) {
  std::vector<float> values(bits.begin(), bits.end());
  write_heatmap(header, Heatmap(spec, std::move(values)));
}

std::string scene_stem(int index) {
  std::ostringstream s;
  s << "scene_" << std::setw(4) << std::setfill('0') << index;
  return s.str();
}

template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, std::max(1, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

json read_json_file(const fs::path& path, bool config) {
  std::ifstream in(path);
  if (!in) {
    const std::string msg = "cannot open " + path.string();
    if (config) throw ConfigError(msg);
    throw DataError(msg);
  }
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    const std::string msg = path.string() + ": " + e.what();
    if (config) throw ConfigError(msg);
    throw DataError(msg);
  }
}

}  // namespace

json parse_flag_value(const ConfigKey& key, const std::string& text) {
  const std::string name = key.name;
  const bool looks_json = !text.empty() && (text.front() == '[' || text.front() == '{');
  if (looks_json) {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }
  switch (key.type) {
    case KeyType::Int: return parse_int(name, text);
    case KeyType::Number: return parse_double(name, text);
    case KeyType::Bool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError(name + ": expected true or false");
    case KeyType::String: return text;
    case KeyType::IntList: {
      json arr = json::array();
      for (const auto& part : split(text, ',')) arr.push_back(parse_int(name, part));
      return arr;
    }
    case KeyType::NumberList: {
      json arr = json::array();
      for (const auto& part : split(text, ',')) arr.push_back(parse_double(name, part));
      return arr;
    }
    case KeyType::StringList: {
      json arr = json::array();
      for (const auto& part : split(text, ',')) arr.push_back(part);
      return arr;
    }
    case KeyType::SizeTable: {
      json arr = json::array();
      for (const auto& part : split(text, ',')) {
        const auto f = split(part, ':');
        if (f.size() != 3) throw ConfigError(name + ": expected length:width:jitter entries");
        arr.push_back({parse_double(name, f[0]), parse_double(name, f[1]),
                       parse_double(name, f[2])});
      }
      return arr;
    }
  }
  throw ConfigError(name + ": unsupported key type");
}

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  read_key(j, "scenes", cfg.num_scenes);
  read_key(j, "seed", cfg.scene.rng_seed);
  read_key(j, "num_objects_min", cfg.scene.min_objects);
  read_key(j, "num_objects_max", cfg.scene.max_objects);
  read_key(j, "class_mix", cfg.scene.class_mix);
  if (j.contains("class_names")) {
    read_key(j, "class_names", cfg.scene.class_names);
  } else if (cfg.scene.class_names.size() != cfg.scene.class_mix.size()) {
    cfg.scene.class_names.clear();
  }
  if (j.contains("class_sizes")) {
    std::vector<std::vector<double>> rows;
    read_key(j, "class_sizes", rows);
    cfg.scene.size_table.clear();
    for (const auto& r : rows) {
      if (r.size() != 3) throw ConfigError("class_sizes entries must be [length, width, jitter]");
      cfg.scene.size_table.push_back({r[0], r[1], r[2]});
    }
  }
  cfg.scene.spec.num_classes = static_cast<int>(cfg.scene.class_mix.size());
  read_key(j, "grid_size_x", cfg.scene.spec.size_x);
  read_key(j, "grid_size_y", cfg.scene.spec.size_y);
  read_key(j, "cell_size", cfg.scene.spec.cell_size);
  read_key(j, "origin_x", cfg.scene.spec.origin_x);
  read_key(j, "origin_y", cfg.scene.spec.origin_y);
  read_key(j, "min_separation", cfg.scene.min_same_class_separation);
  read_key(j, "clutter_min_gt_distance", cfg.scene.clutter_min_gt_distance);
  read_key(j, "max_placement_attempts", cfg.scene.max_placement_attempts);

  read_key(j, "easy_fraction", cfg.model.easy_fraction);
  read_key(j, "easy_amplitude", cfg.model.easy_amplitude);
  read_key(j, "hard_amplitude_min", cfg.model.hard_amplitude_min);
  read_key(j, "hard_amplitude_max", cfg.model.hard_amplitude_max);
  read_key(j, "clutter_peaks", cfg.model.clutter_peaks);
  read_key(j, "clutter_amplitude_min", cfg.model.clutter_amplitude_min);
  read_key(j, "clutter_amplitude_max", cfg.model.clutter_amplitude_max);
  read_key(j, "stage_gain", cfg.model.stage_gain);

  int baseline_k = cfg.baseline.total_budget();
  read_key(j, "baseline_k", baseline_k);
  read_key(j, "num_stages", cfg.hip.num_stages);
  if (j.contains("k_per_stage")) {
    read_key(j, "k_per_stage", cfg.hip.k_per_stage);
  } else {
    cfg.hip.k_per_stage = split_budget(baseline_k, cfg.hip.num_stages);
  }
  if (j.contains("mask_type")) {
    std::string mt;
    read_key(j, "mask_type", mt);
    cfg.hip.mask_type = parse_mask_type(mt);
  }
  if (j.contains("small_classes")) {
    std::vector<int> sc;
    read_key(j, "small_classes", sc);
    cfg.hip.small_classes = std::set<int>(sc.begin(), sc.end());
  }
  read_key(j, "pooling_kernel", cfg.hip.pooling_kernel);
  cfg.baseline = HipConfig{1, {baseline_k}, MaskType::Point, {}, cfg.hip.pooling_kernel};

  read_key(j, "thresholds", cfg.recall.thresholds);
  read_key(j, "class_agnostic", cfg.recall.class_agnostic);
  read_key(j, "min_overlap", cfg.render.min_overlap);
  read_key(j, "min_radius_cells", cfg.render.min_radius_cells);
  read_key(j, "detect_eta", cfg.detect_match.eta);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::optional<fs::path>& path,
                                        const std::map<std::string, std::string>& overrides) {
  json j = path ? read_json_file(*path, /*config=*/true) : json::object();
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, text] : overrides) {
    const ConfigKey* k = find_key(key);
    if (!k) throw ConfigError("unknown config key '" + key + "'");
    j[key] = parse_flag_value(*k, text);
  }
  return experiment_from_json(j);
}

ExperimentResult cmd_simulate(const SimulateOptions& opts) {
  const ExperimentConfig cfg = load_experiment_config(opts.config, opts.overrides);
  ExperimentResult result = run_experiment(cfg, opts.jobs);
  const auto& names = cfg.scene.class_names;

  fs::create_directories(opts.out_dir / "scenes");
  fs::create_directories(opts.out_dir / "candidates");

  std::ostringstream csv;
  csv << kRecallCsvHeader << '\n';
  write_report_csv_rows(csv, "hip", result.hip_pooled, names);
  write_report_csv_rows(csv, "baseline", result.baseline_pooled, names);
  write_text_file(opts.out_dir / "report.csv", csv.str());

  ordered_json report;
  report["config"] = experiment_to_json(cfg);
  ordered_json summary;
  summary["num_scenes"] = cfg.num_scenes;
  summary["mean_mAR_hip"] = result.mean_mar_hip;
  summary["mean_mAR_baseline"] = result.mean_mar_baseline;
  summary["mean_delta"] = result.mean_delta;
  summary["fraction_delta_nonnegative"] = result.fraction_nonnegative;
  report["summary"] = summary;
  report["hip"] = report_to_json(result.hip_pooled, names);
  report["baseline"] = report_to_json(result.baseline_pooled, names);
  ordered_json scenes = ordered_json::array();
  for (const SceneOutcome& s : result.scenes) {
    ordered_json row;
    row["index"] = s.index;
    row["seed"] = s.seed;
    row["num_gt"] = s.scene.gts.size();
    row["mAR_hip"] = s.hip.mean_recall;
    row["mAR_baseline"] = s.baseline.mean_recall;
    row["delta"] = s.delta;
    row["hip_stage_mAR"] = s.hip_stage_mar;
    scenes.push_back(std::move(row));

    const std::string stem = scene_stem(s.index);
    write_text_file(opts.out_dir / "scenes" / (stem + ".json"), dump_json(scene_to_json(s.scene)));
    std::ostringstream hip_lines, base_lines;
    write_candidates_jsonl(hip_lines, s.hip_candidates);
    write_candidates_jsonl(base_lines, s.baseline_candidates);
    write_text_file(opts.out_dir / "candidates" / (stem + ".hip.jsonl"), hip_lines.str());
    write_text_file(opts.out_dir / "candidates" / (stem + ".baseline.jsonl"), base_lines.str());
  }
  report["scenes"] = std::move(scenes);
  write_text_file(opts.out_dir / "report.json", dump_json(report));

  std::ostringstream hip_label, base_label;
  hip_label << "HIP " << cfg.hip.num_stages << " stages (" << cfg.hip.total_budget() << ")";
  base_label << "single stage (" << cfg.baseline.total_budget() << ")";
  const std::vector<CurveSeries> series = {
      {hip_label.str(), result.hip_pooled.thresholds, result.hip_pooled.recall},
      {base_label.str(), result.baseline_pooled.thresholds, result.baseline_pooled.recall}};
  write_text_file(opts.out_dir / "recall_curve.svg",
                  recall_curve_svg("Candidate recall vs center distance", series));

  ordered_json version;
  version["tool"] = "hipkit";
  version["version"] = HIPKIT_VERSION;
  write_text_file(opts.out_dir / "version.json", dump_json(version));
  return result;
}

HipResult cmd_probe(const ProbeOptions& opts) {
  if (opts.heatmaps.empty()) throw ConfigError("probe needs at least one stage heatmap");
  std::vector<Heatmap> stages;
  for (std::size_t i = 0; i < opts.heatmaps.size(); ++i) {
    try {
      stages.push_back(read_heatmap(opts.heatmaps[i]));
    } catch (const DataError& e) {
      throw DataError("stage " + std::to_string(i) + ": " + e.what());
    }
    if (!(stages.back().spec() == stages.front().spec())) {
      throw DataError("stage " + std::to_string(i) + ": grid spec differs from stage 0");
    }
  }
  HipConfig cfg;
  cfg.num_stages = static_cast<int>(stages.size());
  if (opts.k.size() == 1) {
    cfg.k_per_stage.assign(stages.size(), opts.k.front());
  } else {
    cfg.k_per_stage = opts.k;
  }
  cfg.mask_type = opts.mask_type;
  cfg.small_classes = std::set<int>(opts.small_classes.begin(), opts.small_classes.end());
  cfg.pooling_kernel = opts.pooling_kernel;
  cfg.validate();
  if (opts.mask_type == MaskType::Box && !(opts.box_length > 0.0 && opts.box_width > 0.0)) {
    throw ConfigError("box size must be positive");
  }

  const BevGridSpec spec = stages.front().spec();
  StageSource source;
  source.heatmap = [&](int stage, std::span<const Candidate>) { return stages[stage]; };
  source.boxes = [&](int, std::span<const Candidate> cands) {
    std::vector<BevBox> boxes;
    for (const Candidate& c : cands) {
      boxes.push_back(BevBox{c.world_center.x(), c.world_center.y(), opts.box_length,
                             opts.box_width, 0.0, c.class_id, static_cast<double>(c.score)});
    }
    return boxes;
  };
  HipResult result = run_hip(source, cfg, spec);

  fs::create_directories(opts.out_dir / "masks");
  std::ostringstream lines;
  write_candidates_jsonl(lines, result.candidates);
  write_text_file(opts.out_dir / "candidates.jsonl", lines.str());
  for (const StageTrace& t : result.traces) {
    const std::string stem = "stage_" + std::to_string(t.stage);
    write_mask(opts.out_dir / "masks" / (stem + "_positive.json"), t.positive_mask.bits(), spec);
    write_mask(opts.out_dir / "masks" / (stem + "_accumulated.json"),
               t.accumulated_mask.bits(), spec);
  }
  return result;
}

AuditResult cmd_audit(const AuditOptions& opts) {
  opts.recall.validate();
  DetectionDump dump = read_detection_dump(opts.dump);
  std::sort(dump.scenes.begin(), dump.scenes.end(),
            [](const DumpScene& a, const DumpScene& b) { return a.scene_id < b.scene_id; });
  const auto& names = dump.class_names;
  const auto& thr = opts.recall.thresholds;

  const int n = static_cast<int>(dump.scenes.size());
  std::vector<RecallReport> reports(dump.scenes.size());
  std::vector<std::vector<std::vector<int>>> matches(dump.scenes.size());
  parallel_for(n, opts.jobs, [&](int i) {
    const DumpScene& s = dump.scenes[static_cast<std::size_t>(i)];
    reports[i] = average_recall(s.predictions, s.ground_truth, opts.recall);
    for (double t : thr) {
      matches[i].push_back(
          greedy_center_match(s.predictions, s.ground_truth, t, opts.recall.class_agnostic));
    }
  });

  AuditResult out;
  RecallAccumulator acc(opts.recall);
  for (const auto& r : reports) acc.add(r);
  out.pooled = acc.report();

  ordered_json inv;
  inv["thresholds"] = thr;
  ordered_json inv_scenes = ordered_json::array();
  std::size_t total_fn = 0;
  for (std::size_t i = 0; i < dump.scenes.size(); ++i) {
    const DumpScene& s = dump.scenes[i];
    ordered_json unmatched = ordered_json::array();
    for (std::size_t g = 0; g < s.ground_truth.size(); ++g) {
      std::vector<double> missed;
      for (std::size_t t = 0; t < thr.size(); ++t) {
        if (matches[i][t][g] < 0) missed.push_back(thr[t]);
      }
      if (missed.empty()) continue;
      const BevBox& b = s.ground_truth[g];
      ordered_json e;
      e["gt_index"] = g;
      e["class_id"] = b.class_id;
      e["class"] = class_label(b.class_id, names);
      e["cx"] = b.cx;
      e["cy"] = b.cy;
      e["length"] = b.length;
      e["width"] = b.width;
      e["yaw"] = b.yaw;
      e["missed_at"] = missed;
      unmatched.push_back(std::move(e));
    }
    if (unmatched.empty()) continue;
    total_fn += unmatched.size();
    ordered_json row;
    row["scene_id"] = s.scene_id;
    row["unmatched"] = std::move(unmatched);
    inv_scenes.push_back(std::move(row));
  }
  inv["num_unmatched"] = total_fn;
  inv["scenes"] = std::move(inv_scenes);
  out.fn_inventory = inv;

  if (opts.reference) {
    const DetectionDump ref = read_detection_dump(*opts.reference);
    RecallAccumulator ref_acc(opts.recall);
    for (const DumpScene& s : ref.scenes) ref_acc.add(s.predictions, s.ground_truth);
    out.reference = ref_acc.report();
  }

  fs::create_directories(opts.out_dir);
  std::ostringstream csv;
  csv << kRecallCsvHeader << '\n';
  write_report_csv_rows(csv, "pooled", out.pooled, names);
  if (out.reference) write_report_csv_rows(csv, "reference", *out.reference, names);
  write_text_file(opts.out_dir / "recall.csv", csv.str());

  ordered_json rj;
  rj["pooled"] = report_to_json(out.pooled, names);
  if (out.reference) rj["reference"] = report_to_json(*out.reference, names);
  ordered_json per_scene = ordered_json::array();
  for (std::size_t i = 0; i < dump.scenes.size(); ++i) {
    ordered_json row;
    row["scene_id"] = dump.scenes[i].scene_id;
    row["num_gt"] = reports[i].counts.num_gt;
    row["num_pred"] = reports[i].counts.num_pred;
    row["recall"] = reports[i].recall;
    row["mAR"] = reports[i].mean_recall;
    per_scene.push_back(std::move(row));
  }
  rj["scenes"] = std::move(per_scene);
  write_text_file(opts.out_dir / "recall.json", dump_json(rj));
  write_text_file(opts.out_dir / "fn_inventory.json", dump_json(out.fn_inventory));

  // Class-wise bars; with a reference dump its bars are the 100% baseline.
  std::vector<std::string> series;
  if (out.reference) {
    for (double t : thr) series.push_back("reference CD " + format_number(t) + " m");
  }
  for (double t : thr) series.push_back("audited CD " + format_number(t) + " m");
  std::vector<BarGroup> groups;
  for (const ClassRecall& row : out.pooled.per_class) {
    if (row.counts.num_gt == 0) continue;
    BarGroup g{class_label(row.class_id, names), {}};
    const ClassRecall* ref_row = nullptr;
    if (out.reference) {
      for (const ClassRecall& r : out.reference->per_class) {
        if (r.class_id == row.class_id) ref_row = &r;
      }
      for (std::size_t t = 0; t < thr.size(); ++t) g.values.push_back(ref_row ? 100.0 : 0.0);
    }
    for (std::size_t t = 0; t < thr.size(); ++t) {
      double v = 100.0 * row.recall[t];
      if (out.reference) {
        const double base = ref_row ? ref_row->recall[t] : 0.0;
        v = base > 0.0 ? 100.0 * row.recall[t] / base : 0.0;
      }
      g.values.push_back(v);
    }
    groups.push_back(std::move(g));
  }
  write_text_file(opts.out_dir / "classwise.svg",
                  grouped_bar_svg(out.reference ? "Class-wise recall (reference = 100%)"
                                                : "Class-wise recall (%)",
                                  series, groups));
  return out;
}

void cmd_report(const ReportOptions& opts) {
  if (opts.inputs.empty()) throw ConfigError("report needs at least one input");
  std::vector<std::pair<std::string, RecallReport>> reports;
  std::vector<std::string> names;
  auto add = [&](const std::string& label, const json& j) {
    reports.emplace_back(label, report_from_json(j));
    // Recover display names written next to the class ids.
    for (const auto& row : j.value("per_class", json::array())) {
      const int id = row.value("class_id", -1);
      if (id < 0 || !row.contains("class") || !row.at("class").is_string()) continue;
      if (names.size() <= static_cast<std::size_t>(id)) names.resize(id + 1);
      if (names[id].empty()) names[id] = row.at("class").get<std::string>();
    }
  };
  for (const fs::path& p : opts.inputs) {
    const json j = read_json_file(p, /*config=*/false);
    const std::string stem = p.stem().string();
    if (j.contains("thresholds")) {
      add(stem, j);
    } else if (j.contains("hip") && j.contains("baseline")) {
      add(stem + ":hip", j.at("hip"));
      add(stem + ":baseline", j.at("baseline"));
    } else if (j.contains("pooled")) {
      add(stem, j.at("pooled"));
      if (j.contains("reference")) add(stem + ":reference", j.at("reference"));
    } else {
      throw DataError(p.string() + ": no recall report found");
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) names[i] = std::to_string(i);
  }
  std::ostringstream csv;
  csv << kRecallCsvHeader << '\n';
  std::vector<CurveSeries> series;
  for (const auto& [label, r] : reports) {
    write_report_csv_rows(csv, label, r, names);
    series.push_back({label, r.thresholds, r.recall});
  }
  fs::create_directories(opts.out_dir);
  write_text_file(opts.out_dir / "recall.csv", csv.str());
  write_text_file(opts.out_dir / "recall_curve.svg", recall_curve_svg(opts.title, series));
}

namespace {

std::string dashed(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hipkit: hard instance probing over BEV center heatmaps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(HIPKIT_VERSION));

  // simulate
  SimulateOptions sim;
  std::string sim_config;
  auto* simulate = app.add_subcommand("simulate", "run the seeded HIP vs single-stage experiment");
  simulate->add_option("--config", sim_config, "experiment config (JSON)");
  simulate->add_option("--out", sim.out_dir, "output directory")->required();
  simulate->add_option("--jobs", sim.jobs, "worker threads")->check(CLI::PositiveNumber);
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
  for (const ConfigKey& k : experiment_schema()) {
    auto* opt = simulate->add_option("--" + dashed(k.name), flag_values[k.name], k.help);
    flag_opts.emplace_back(k.name, opt);
  }

  // probe
  ProbeOptions probe;
  std::vector<std::string> probe_maps;
  std::string probe_mask = "point";
  std::string probe_box;
  auto* probe_cmd = app.add_subcommand("probe", "run multi-stage Top-K probing on heatmap files");
  probe_cmd->add_option("--heatmap", probe_maps, "stage heatmap header (repeat per stage)")
      ->required();
  probe_cmd->add_option("--k", probe.k, "candidates per stage (one value or one per stage)")
      ->delimiter(',');
  probe_cmd->add_option("--mask-type", probe_mask, "point | pooling | box");
  probe_cmd->add_option("--small-classes", probe.small_classes, "center-only classes (pooling)")
      ->delimiter(',');
  probe_cmd->add_option("--pooling-kernel", probe.pooling_kernel, "pooling kernel (cells)");
  probe_cmd->add_option("--box-size", probe_box, "box mode footprint LENGTH,WIDTH (m)");
  probe_cmd->add_option("--out", probe.out_dir, "output directory")->required();

  // audit
  AuditOptions audit;
  std::string audit_dump, audit_ref;
  auto* audit_cmd = app.add_subcommand("audit", "recall audit and FN inventory of a detection dump");
  audit_cmd->add_option("--dump", audit_dump, "detection dump (JSON)")->required();
  audit_cmd->add_option("--reference", audit_ref, "reference dump; its recall is drawn as 100%");
  audit_cmd->add_option("--thresholds", audit.recall.thresholds, "center-distance thresholds (m)")
      ->delimiter(',');
  audit_cmd->add_flag("--class-agnostic", audit.recall.class_agnostic, "ignore classes");
  audit_cmd->add_option("--jobs", audit.jobs, "worker threads")->check(CLI::PositiveNumber);
  audit_cmd->add_option("--out", audit.out_dir, "output directory")->required();

  // report
  ReportOptions report;
  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "redraw recall curves from report JSON files");
  report_cmd->add_option("--input", report_inputs, "report JSON (repeatable)")->required();
  report_cmd->add_option("--title", report.title, "chart title");
  report_cmd->add_option("--out", report.out_dir, "output directory")->required();

  std::vector<std::string> argv_store = args;
  argv_store.insert(argv_store.begin(), "hipkit");
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) {
      if (!sim_config.empty()) sim.config = sim_config;
      for (const auto& [key, opt] : flag_opts) {
        if (opt->count() > 0) sim.overrides[key] = flag_values[key];
      }
      const ExperimentResult r = cmd_simulate(sim);
      out << "mean mAR hip " << format_number(r.mean_mar_hip) << " baseline "
          << format_number(r.mean_mar_baseline) << " delta " << format_number(r.mean_delta)
          << "\n";
    } else if (*probe_cmd) {
      for (const auto& p : probe_maps) probe.heatmaps.emplace_back(p);
      probe.mask_type = parse_mask_type(probe_mask);
      if (!probe_box.empty()) {
        const auto parts = split(probe_box, ',');
        if (parts.size() != 2) throw ConfigError("--box-size expects LENGTH,WIDTH");
        probe.box_length = parse_double("--box-size", parts[0]);
        probe.box_width = parse_double("--box-size", parts[1]);
      }
      const HipResult r = cmd_probe(probe);
      out << r.candidates.size() << " candidates over " << r.traces.size() << " stages"
          << (r.degenerate ? " (degenerate)" : "") << "\n";
    } else if (*audit_cmd) {
      audit.dump = audit_dump;
      if (!audit_ref.empty()) audit.reference = fs::path(audit_ref);
      const AuditResult r = cmd_audit(audit);
      out << "mAR " << format_number(r.pooled.mean_recall) << ", "
          << r.fn_inventory.at("num_unmatched").get<std::size_t>() << " unmatched ground truth\n";
    } else if (*report_cmd) {
      for (const auto& p : report_inputs) report.inputs.emplace_back(p);
      cmd_report(report);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace hipkit::cli

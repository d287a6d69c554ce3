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

#include "hipkit/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "hipkit/errors.hpp"
#include "hipkit/json_io.hpp"

namespace hipkit {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string class_label(int class_id, const std::vector<std::string>& names) {
  if (class_id >= 0 && static_cast<std::size_t>(class_id) < names.size()) return names[class_id];
  return std::to_string(class_id);
}

namespace {

nlohmann::ordered_json counts_to_json(const RecallCounts& c) {
  nlohmann::ordered_json j;
  j["num_gt"] = c.num_gt;
  j["num_pred"] = c.num_pred;
  j["num_matched"] = c.matched;
  return j;
}

RecallCounts counts_from_json(const nlohmann::json& j) {
  RecallCounts c;
  c.num_gt = j.at("num_gt").get<std::size_t>();
  c.num_pred = j.at("num_pred").get<std::size_t>();
  c.matched = j.at("num_matched").get<std::vector<std::size_t>>();
  return c;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

nlohmann::ordered_json report_to_json(const RecallReport& report,
                                      const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["thresholds"] = report.thresholds;
  j["recall"] = report.recall;
  j["mAR"] = report.mean_recall;
  j["empty_gt"] = report.empty_gt;
  j["counts"] = counts_to_json(report.counts);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ClassRecall& row : report.per_class) {
    nlohmann::ordered_json r;
    r["class_id"] = row.class_id;
    r["class"] = class_label(row.class_id, class_names);
    r["recall"] = row.recall;
    r["counts"] = counts_to_json(row.counts);
    rows.push_back(std::move(r));
  }
  j["per_class"] = std::move(rows);
  return j;
}

RecallReport report_from_json(const nlohmann::json& j) {
  try {
    RecallReport r;
    r.thresholds = j.at("thresholds").get<std::vector<double>>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.mean_recall = j.at("mAR").get<double>();
    r.empty_gt = j.value("empty_gt", false);
    r.counts = counts_from_json(j.at("counts"));
    for (const auto& row : j.at("per_class")) {
      r.per_class.push_back({row.at("class_id").get<int>(), counts_from_json(row.at("counts")),
                             row.at("recall").get<std::vector<double>>()});
    }
    if (r.recall.size() != r.thresholds.size()) throw DataError("recall/threshold length mismatch");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed recall report: ") + e.what());
  }
}

void write_report_csv_rows(std::ostream& out, const std::string& scope,
                           const RecallReport& report,
                           const std::vector<std::string>& class_names) {
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    out << scope << ",all," << format_number(report.thresholds[t]) << ','
        << format_number(report.recall[t]) << ',' << report.counts.num_gt << ','
        << report.counts.matched[t] << '\n';
  }
  for (const ClassRecall& row : report.per_class) {
    for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
      out << scope << ',' << class_label(row.class_id, class_names) << ','
          << format_number(report.thresholds[t]) << ',' << format_number(row.recall[t]) << ','
          << row.counts.num_gt << ',' << row.counts.matched[t] << '\n';
    }
  }
}

nlohmann::ordered_json scene_to_json(const SyntheticScene& scene) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json gts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scene.gts.size(); ++i) {
    const BevBox& b = scene.gts[i];
    nlohmann::ordered_json g;
    g["cx"] = b.cx;
    g["cy"] = b.cy;
    g["length"] = b.length;
    g["width"] = b.width;
    g["yaw"] = b.yaw;
    g["class_id"] = b.class_id;
    g["amplitude"] = static_cast<double>(scene.amplitudes[i]);
    gts.push_back(std::move(g));
  }
  j["ground_truth"] = std::move(gts);
  nlohmann::ordered_json clutter = nlohmann::ordered_json::array();
  for (const ClutterPeak& p : scene.clutter) {
    nlohmann::ordered_json c;
    c["x"] = p.x;
    c["y"] = p.y;
    c["class_id"] = p.class_id;
    c["amplitude"] = static_cast<double>(p.amplitude);
    clutter.push_back(std::move(c));
  }
  j["clutter"] = std::move(clutter);
  return j;
}

SyntheticScene scene_from_json(const nlohmann::json& j) {
  SyntheticScene scene;
  std::size_t i = 0;
  for (const auto& g : j.at("ground_truth")) {
    scene.gts.push_back(box_from_json(g, "ground_truth[" + std::to_string(i++) + "]"));
    scene.amplitudes.push_back(static_cast<float>(g.at("amplitude").get<double>()));
  }
  for (const auto& c : j.at("clutter")) {
    scene.clutter.push_back({c.at("x").get<int>(), c.at("y").get<int>(),
                             c.at("class_id").get<int>(),
                             static_cast<float>(c.at("amplitude").get<double>())});
  }
  return scene;
}

DetectionDump parse_detection_dump(const nlohmann::json& j) {
  DetectionDump dump;
  if (!j.is_object() || !j.contains("scenes") || !j.at("scenes").is_array()) {
    throw DataError("detection dump must be an object with a \"scenes\" array");
  }
  if (j.contains("class_names")) {
    try {
      dump.class_names = j.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("class_names: ") + e.what());
    }
  }
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& s : j.at("scenes")) {
    const std::string where_scene = "scene #" + std::to_string(index);
    if (!s.is_object() || !s.contains("scene_id") || !s.at("scene_id").is_string()) {
      throw DataError(where_scene + ": missing string scene_id");
    }
    DumpScene scene;
    scene.scene_id = s.at("scene_id").get<std::string>();
    if (!seen.insert(scene.scene_id).second) {
      throw DataError("duplicate scene_id '" + scene.scene_id + "'");
    }
    const std::string where = "scene '" + scene.scene_id + "'";
    for (const char* key : {"predictions", "ground_truth"}) {
      if (!s.contains(key) || !s.at(key).is_array()) {
        throw DataError(where + ": missing array \"" + key + "\"");
      }
    }
    std::size_t r = 0;
    for (const auto& p : s.at("predictions")) {
      const std::string what = where + " predictions[" + std::to_string(r++) + "]";
      BevBox box = box_from_json(p, what);
      if (!box.score) throw DataError(what + ": prediction has no score");
      scene.predictions.push_back(box);
    }
    r = 0;
    for (const auto& g : s.at("ground_truth")) {
      scene.ground_truth.push_back(
          box_from_json(g, where + " ground_truth[" + std::to_string(r++) + "]"));
    }
    dump.scenes.push_back(std::move(scene));
    ++index;
  }
  return dump;
}

DetectionDump read_detection_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detection dump " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return parse_detection_dump(j);
}

nlohmann::ordered_json dump_to_json(const DetectionDump& dump) {
  nlohmann::ordered_json j;
  if (!dump.class_names.empty()) j["class_names"] = dump.class_names;
  nlohmann::ordered_json scenes = nlohmann::ordered_json::array();
  for (const DumpScene& s : dump.scenes) {
    nlohmann::ordered_json o;
    o["scene_id"] = s.scene_id;
    o["predictions"] = nlohmann::ordered_json::array();
    for (const BevBox& b : s.predictions) o["predictions"].push_back(box_to_json(b));
    o["ground_truth"] = nlohmann::ordered_json::array();
    for (const BevBox& b : s.ground_truth) o["ground_truth"].push_back(box_to_json(b));
    scenes.push_back(std::move(o));
  }
  j["scenes"] = std::move(scenes);
  return j;
}

std::string recall_curve_svg(const std::string& title, const std::vector<CurveSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 50, B = 60;
  const double pw = W - L - R;
  const double ph = H - T - B;
  // Thresholds are spaced by rank so the usual {0.5, 1, 2, 4} set is readable.
  std::vector<double> ticks;
  for (const auto& s : series) ticks.insert(ticks.end(), s.thresholds.begin(), s.thresholds.end());
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  auto xpos = [&](double thr) {
    const auto it = std::lower_bound(ticks.begin(), ticks.end(), thr);
    const double rank = static_cast<double>(it - ticks.begin());
    const double denom = ticks.size() > 1 ? double(ticks.size() - 1) : 1.0;
    return L + pw * (ticks.size() > 1 ? rank / denom : 0.5);
  };
  auto ypos = [&](double recall) { return T + ph * (1.0 - recall); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double r = i / 5.0;
    svg << "<line x1=\"" << L << "\" y1=\"" << fixed(ypos(r)) << "\" x2=\"" << L + pw
        << "\" y2=\"" << fixed(ypos(r)) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << fixed(ypos(r) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(100.0 * r, 0) << "</text>\n";
  }
  for (double t : ticks) {
    svg << "<text x=\"" << fixed(xpos(t)) << "\" y=\"" << T + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << format_number(t) << "</text>\n";
  }
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"12\">center distance threshold (m)</text>\n";
  svg << "<text x=\"18\" y=\"" << T + ph / 2 << "\" transform=\"rotate(-90 18 " << T + ph / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">recall (%)</text>\n";
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
      if (k) svg << ' ';
      svg << fixed(xpos(s.thresholds[k])) << ',' << fixed(ypos(s.recall[k]));
    }
    svg << "\"/>\n";
    for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
      svg << "<circle cx=\"" << fixed(xpos(s.thresholds[k])) << "\" cy=\""
          << fixed(ypos(s.recall[k])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 16 + 18.0 * double(i);
    svg << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
        << escape_xml(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string grouped_bar_svg(const std::string& title, const std::vector<std::string>& series,
                            const std::vector<BarGroup>& groups) {
  constexpr double H = 420, L = 70, R = 170, T = 50, B = 80;
  const double group_w = 24.0 * std::max<std::size_t>(1, series.size()) + 16.0;
  const double pw = group_w * std::max<std::size_t>(1, groups.size());
  const double W = L + pw + R;
  const double ph = H - T - B;
  double vmax = 100.0;
  for (const auto& g : groups) {
    for (double v : g.values) vmax = std::max(vmax, v);
  }
  vmax = 20.0 * std::ceil(vmax / 20.0);
  auto ypos = [&](double v) { return T + ph * (1.0 - v / vmax); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(W, 0) << "\" height=\""
      << H << "\" viewBox=\"0 0 " << fixed(W, 0) << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(W / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = vmax * i / 5.0;
    svg << "<line x1=\"" << L << "\" y1=\"" << fixed(ypos(v)) << "\" x2=\"" << fixed(L + pw)
        << "\" y2=\"" << fixed(ypos(v)) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << fixed(ypos(v) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(v, 0) << "</text>\n";
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = L + group_w * double(gi) + 8.0;
    for (std::size_t si = 0; si < groups[gi].values.size(); ++si) {
      const double v = groups[gi].values[si];
      svg << "<rect x=\"" << fixed(gx + 24.0 * double(si)) << "\" y=\"" << fixed(ypos(v))
          << "\" width=\"20\" height=\"" << fixed(ypos(0) - ypos(v)) << "\" fill=\""
          << kPalette[si % std::size(kPalette)] << "\"><title>" << escape_xml(groups[gi].label)
          << ' ' << fixed(v, 1) << "%</title></rect>\n";
    }
    const double cx = gx + 12.0 * double(groups[gi].values.size());
    svg << "<text x=\"" << fixed(cx) << "\" y=\"" << T + ph + 16 << "\" transform=\"rotate(30 "
        << fixed(cx) << ' ' << T + ph + 16 << ")\" font-size=\"11\">"
        << escape_xml(groups[gi].label) << "</text>\n";
  }
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << fixed(pw) << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = T + 16 + 18.0 * double(si);
    svg << "<rect x=\"" << fixed(L + pw + 12) << "\" y=\"" << ly - 6
        << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[si % std::size(kPalette)]
        << "\"/>\n";
    svg << "<text x=\"" << fixed(L + pw + 30) << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
        << escape_xml(series[si]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace hipkit

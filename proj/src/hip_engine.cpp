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

#include "hipkit/hip_engine.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "hipkit/errors.hpp"
#include "hipkit/geometry.hpp"

namespace hipkit {

std::string to_string(MaskType t) {
  switch (t) {
    case MaskType::Point: return "point";
    case MaskType::Pooling: return "pooling";
    case MaskType::Box: return "box";
  }
  return "unknown";
}

MaskType parse_mask_type(const std::string& s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "point") return MaskType::Point;
  if (lower == "pooling") return MaskType::Pooling;
  if (lower == "box") return MaskType::Box;
  throw ConfigError("unknown mask type '" + s + "' (expected point, pooling or box)");
}

int HipConfig::total_budget() const {
  return std::accumulate(k_per_stage.begin(), k_per_stage.end(), 0);
}

void HipConfig::validate() const {
  if (num_stages < 1) throw ConfigError("num_stages must be at least 1");
  if (static_cast<int>(k_per_stage.size()) != num_stages) {
    throw ConfigError("k_per_stage has " + std::to_string(k_per_stage.size()) +
                      " entries for " + std::to_string(num_stages) + " stages");
  }
  for (int k : k_per_stage) {
    if (k < 1) throw ConfigError("every stage must select at least one candidate");
  }
  if (pooling_kernel < 1 || pooling_kernel % 2 == 0) {
    throw ConfigError("pooling_kernel must be a positive odd number");
  }
}

std::vector<int> split_budget(int total, int stages) {
  if (stages < 1 || total < stages) throw ConfigError("budget too small for the stage count");
  std::vector<int> out(stages, total / stages);
  for (int i = 0; i < total % stages; ++i) ++out[i];
  return out;
}

namespace {

template <typename A, typename B>
void require_same_spec(const A& a, const B& b, const char* what) {
  if (!(a.spec() == b.spec())) throw ConfigError(std::string(what) + ": grid specs differ");
}

Candidate candidate_at(const BevGridSpec& spec, std::size_t flat, float score, int stage) {
  const std::size_t plane = static_cast<std::size_t>(spec.size_x) * spec.size_y;
  Candidate c;
  c.class_id = static_cast<int>(flat / plane);
  const std::size_t rem = flat % plane;
  c.y = static_cast<int>(rem / spec.size_x);
  c.x = static_cast<int>(rem % spec.size_x);
  c.score = score;
  c.stage = stage;
  c.world_center = cell_center(c.x, c.y, spec);
  return c;
}

}  // namespace

TopKResult topk_select(const Heatmap& heatmap, const AccumulatedPositiveMask& apm, int k,
                       int stage) {
  require_same_spec(heatmap, apm, "topk_select");
  if (k < 0) throw ConfigError("k must be non-negative");

  std::vector<std::uint32_t> open;
  open.reserve(heatmap.size());
  for (std::size_t i = 0; i < heatmap.size(); ++i) {
    if (!apm[i]) open.push_back(static_cast<std::uint32_t>(i));
  }
  // Flat CYX index order equals (class, y, x) lexicographic order.
  const auto before = [&heatmap](std::uint32_t a, std::uint32_t b) {
    const float sa = heatmap[a];
    const float sb = heatmap[b];
    return sa != sb ? sa > sb : a < b;
  };
  const std::size_t take = std::min<std::size_t>(open.size(), static_cast<std::size_t>(k));
  if (take < open.size()) {
    std::nth_element(open.begin(), open.begin() + take, open.end(), before);
    open.resize(take);
  }
  std::sort(open.begin(), open.end(), before);

  TopKResult result;
  result.candidates.reserve(take);
  for (std::uint32_t idx : open) {
    result.candidates.push_back(candidate_at(heatmap.spec(), idx, heatmap[idx], stage));
  }
  result.degenerate = take < static_cast<std::size_t>(k) ||
                      (!open.empty() && heatmap[open.back()] <= 0.0f);
  return result;
}

PositiveMask build_positive_mask(std::span<const Candidate> cands, const HipConfig& cfg,
                                 const BevGridSpec& spec,
                                 std::optional<std::span<const BevBox>> boxes) {
  PositiveMask mask(spec);
  if (cfg.mask_type == MaskType::Box) {
    if (!boxes) throw ConfigError("box masking requires predicted boxes for every candidate");
    if (boxes->size() != cands.size()) {
      throw ConfigError("box masking got " + std::to_string(boxes->size()) + " boxes for " +
                        std::to_string(cands.size()) + " candidates");
    }
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Candidate& c = cands[i];
    if (!spec.contains_cell(c.x, c.y) || c.class_id < 0 || c.class_id >= spec.num_classes) {
      throw ConfigError("candidate outside the grid");
    }
    mask.set(c.class_id, c.y, c.x);
    switch (cfg.mask_type) {
      case MaskType::Point:
        break;
      case MaskType::Pooling: {
        if (cfg.small_classes.contains(c.class_id)) break;
        const int r = cfg.pooling_kernel / 2;
        for (int y = std::max(0, c.y - r); y <= std::min(spec.size_y - 1, c.y + r); ++y) {
          for (int x = std::max(0, c.x - r); x <= std::min(spec.size_x - 1, c.x + r); ++x) {
            mask.set(c.class_id, y, x);
          }
        }
        break;
      }
      case MaskType::Box: {
        const BevBox& box = (*boxes)[i];
        // Bounding window of the rotated footprint, then exact center tests.
        const auto corners = box_corners(box);
        Eigen::Vector2d lo = corners[0];
        Eigen::Vector2d hi = corners[0];
        for (const auto& p : corners) {
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
        const Eigen::Vector2d glo = world_to_grid(lo, spec);
        const Eigen::Vector2d ghi = world_to_grid(hi, spec);
        const int x0 = std::max(0, static_cast<int>(std::floor(glo.x())));
        const int y0 = std::max(0, static_cast<int>(std::floor(glo.y())));
        const int x1 = std::min(spec.size_x - 1, static_cast<int>(std::floor(ghi.x())));
        const int y1 = std::min(spec.size_y - 1, static_cast<int>(std::floor(ghi.y())));
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            if (point_in_box(box, cell_center(x, y, spec))) mask.set(c.class_id, y, x);
          }
        }
        break;
      }
    }
  }
  return mask;
}

AccumulatedPositiveMask accumulate_mask(const AccumulatedPositiveMask& apm,
                                        const PositiveMask& m) {
  require_same_spec(apm, m, "accumulate_mask");
  AccumulatedPositiveMask out = apm;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) out.set_flat(i);
  }
  return out;
}

Heatmap apply_mask(const Heatmap& s, const AccumulatedPositiveMask& apm) {
  require_same_spec(s, apm, "apply_mask");
  std::vector<float> values(s.values().begin(), s.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (apm[i]) values[i] = 0.0f;
  }
  return Heatmap(s.spec(), std::move(values));
}

HipResult run_hip(const StageSource& source, const HipConfig& cfg, const BevGridSpec& spec,
                  bool keep_traces) {
  cfg.validate();
  spec.validate();
  if (!source.heatmap) throw ConfigError("stage source has no heatmap provider");
  if (cfg.mask_type == MaskType::Box && !source.boxes) {
    throw ConfigError("box masking requires a box provider");
  }

  HipResult result{{}, AccumulatedPositiveMask(spec), {}, false};
  for (int stage = 0; stage < cfg.num_stages; ++stage) {
    const std::string where = "stage " + std::to_string(stage);
    std::optional<Heatmap> raw;
    try {
      raw.emplace(source.heatmap(stage, result.candidates));
    } catch (const std::exception& e) {
      throw DataError(where + ": heatmap provider failed: " + e.what());
    }
    if (!(raw->spec() == spec)) throw DataError(where + ": heatmap grid spec mismatch");

    Heatmap masked = apply_mask(*raw, result.final_mask);
    TopKResult sel = topk_select(masked, result.final_mask, cfg.k_per_stage[stage], stage);

    std::vector<BevBox> boxes;
    if (cfg.mask_type == MaskType::Box) {
      try {
        boxes = source.boxes(stage, sel.candidates);
      } catch (const std::exception& e) {
        throw DataError(where + ": box provider failed: " + e.what());
      }
    }
    PositiveMask pm = cfg.mask_type == MaskType::Box
                          ? build_positive_mask(sel.candidates, cfg, spec,
                                                std::span<const BevBox>(boxes))
                          : build_positive_mask(sel.candidates, cfg, spec);
    result.final_mask = accumulate_mask(result.final_mask, pm);
    result.degenerate = result.degenerate || sel.degenerate;
    if (keep_traces) {
      result.traces.push_back(StageTrace{stage, std::move(masked), std::move(pm),
                                         result.final_mask, sel.candidates.size(),
                                         sel.degenerate});
    }
    result.candidates.insert(result.candidates.end(), sel.candidates.begin(),
                             sel.candidates.end());
  }
  return result;
}

void write_candidates_jsonl(std::ostream& out, std::span<const Candidate> cands) {
  for (const Candidate& c : cands) {
    nlohmann::ordered_json j;
    j["stage"] = c.stage;
    j["x"] = c.x;
    j["y"] = c.y;
    j["class_id"] = c.class_id;
    j["score"] = static_cast<double>(c.score);
    j["world_x"] = c.world_center.x();
    j["world_y"] = c.world_center.y();
    out << j.dump() << '\n';
  }
}

std::vector<Candidate> read_candidates_jsonl(std::istream& in) {
  std::vector<Candidate> cands;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Candidate c;
      c.stage = j.at("stage").get<int>();
      c.x = j.at("x").get<int>();
      c.y = j.at("y").get<int>();
      c.class_id = j.at("class_id").get<int>();
      c.score = static_cast<float>(j.at("score").get<double>());
      c.world_center = {j.at("world_x").get<double>(), j.at("world_y").get<double>()};
      cands.push_back(c);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("candidate line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cands;
}

}  // namespace hipkit

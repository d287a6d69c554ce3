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

#include "hipkit/heatmap_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hipkit/errors.hpp"
#include "hipkit/json_io.hpp"

namespace hipkit {

static_assert(sizeof(float) == 4, "f32 blobs need 32-bit floats");

nlohmann::json spec_to_json(const BevGridSpec& spec) {
  return {{"size_x", spec.size_x},       {"size_y", spec.size_y},
          {"num_classes", spec.num_classes}, {"cell_size", spec.cell_size},
          {"origin_x", spec.origin_x},   {"origin_y", spec.origin_y}};
}

BevGridSpec spec_from_json(const nlohmann::json& j) {
  try {
    BevGridSpec spec;
    spec.size_x = j.at("size_x").get<int>();
    spec.size_y = j.at("size_y").get<int>();
    spec.num_classes = j.at("num_classes").get<int>();
    spec.cell_size = j.at("cell_size").get<double>();
    spec.origin_x = j.at("origin_x").get<double>();
    spec.origin_y = j.at("origin_y").get<double>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid grid spec: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid grid spec: ") + e.what());
  }
}

nlohmann::ordered_json box_to_json(const BevBox& box) {
  nlohmann::ordered_json j;
  j["cx"] = box.cx;
  j["cy"] = box.cy;
  j["length"] = box.length;
  j["width"] = box.width;
  j["yaw"] = box.yaw;
  j["class_id"] = box.class_id;
  if (box.score) j["score"] = *box.score;
  return j;
}

BevBox box_from_json(const nlohmann::json& j, const std::string& what) {
  try {
    std::optional<double> score;
    if (j.contains("score") && !j.at("score").is_null()) score = j.at("score").get<double>();
    return make_box(j.at("cx").get<double>(), j.at("cy").get<double>(),
                    j.at("length").get<double>(), j.at("width").get<double>(),
                    j.value("yaw", 0.0), j.at("class_id").get<int>(), score);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(what + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(what + ": " + e.what());
  }
}

std::string dump_json(const nlohmann::json& j, int indent) { return j.dump(indent) + "\n"; }
std::string dump_json(const nlohmann::ordered_json& j, int indent) {
  return j.dump(indent) + "\n";
}

std::filesystem::path heatmap_blob_path(const std::filesystem::path& header) {
  std::filesystem::path blob = header;
  blob.replace_extension(".bin");
  return blob;
}

void write_heatmap(const std::filesystem::path& header, const Heatmap& map) {
  const nlohmann::json j = {{"spec", spec_to_json(map.spec())},
                            {"dtype", "f32"},
                            {"layout", "CYX"},
                            {"endianness", "little"}};
  std::ofstream hdr(header, std::ios::binary);
  if (!hdr) throw DataError("cannot open " + header.string() + " for writing");
  hdr << dump_json(j);

  std::vector<char> bytes(map.size() * 4);
  for (std::size_t i = 0; i < map.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(map[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  const auto blob = heatmap_blob_path(header);
  std::ofstream out(blob, std::ios::binary);
  if (!out) throw DataError("cannot open " + blob.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Heatmap read_heatmap(const std::filesystem::path& header) {
  std::ifstream hdr(header, std::ios::binary);
  if (!hdr) throw DataError("cannot open heatmap header " + header.string());
  nlohmann::json j;
  try {
    hdr >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(header.string() + ": malformed header: " + e.what());
  }
  if (j.value("dtype", "") != "f32" || j.value("layout", "") != "CYX" ||
      j.value("endianness", "") != "little" || !j.contains("spec")) {
    throw DataError(header.string() + ": header must declare f32 / CYX / little");
  }
  const BevGridSpec spec = spec_from_json(j.at("spec"));

  const auto blob = heatmap_blob_path(header);
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw DataError("cannot open heatmap blob " + blob.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() != spec.num_cells() * 4) {
    throw DataError(blob.string() + ": blob holds " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(spec.num_cells() * 4));
  }
  std::vector<float> values(spec.num_cells());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    values[i] = std::bit_cast<float>(bits);
  }
  try {
    return Heatmap(spec, std::move(values));
  } catch (const std::exception& e) {
    throw DataError(blob.string() + ": " + e.what());
  }
}

}  // namespace hipkit

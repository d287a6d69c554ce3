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

#include <string>

#include <json.hpp>

#include "hipkit/bev_grid.hpp"
#include "hipkit/box.hpp"

namespace hipkit {

nlohmann::json spec_to_json(const BevGridSpec& spec);
BevGridSpec spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json box_to_json(const BevBox& box);
/// `what` prefixes error messages (e.g. "scene 3 prediction 7").
BevBox box_from_json(const nlohmann::json& j, const std::string& what);

/// Compact serialization with a fixed key order and shortest round-trip
/// floats, so equal documents produce equal bytes.
std::string dump_json(const nlohmann::json& j, int indent = 2);
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

}  // namespace hipkit

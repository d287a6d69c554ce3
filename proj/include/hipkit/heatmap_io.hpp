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

#include "hipkit/bev_grid.hpp"

namespace hipkit {

// On-disk heatmap: `<stem>.json` carries
//   {"spec": {...}, "dtype": "f32", "layout": "CYX", "endianness": "little"}
// and `<stem>.bin` holds the raw little-endian float32 values.

/// Blob path paired with a header path (extension replaced by ".bin").
std::filesystem::path heatmap_blob_path(const std::filesystem::path& header);

void write_heatmap(const std::filesystem::path& header, const Heatmap& map);

/// Throws DataError on a corrupt header, truncated blob or out-of-range value.
Heatmap read_heatmap(const std::filesystem::path& header);

}  // namespace hipkit

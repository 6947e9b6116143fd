// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "metappear/data/synthetic.hpp"
#include "metappear/render/image.hpp"
#include "metappear/svbrdf/svbrdf.hpp"

namespace metappear::app {

nlohmann::json spec_to_json(const data::SyntheticBrdfSpec& spec);
data::SyntheticBrdfSpec spec_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Task directory: task.json (geometry and split record), target.raw and
/// target.png, plus truth maps when known.
void save_flash_task(const svbrdf::FlashTask& task, const std::filesystem::path& dir);
svbrdf::FlashTask load_flash_task(const std::filesystem::path& dir);

/// One PNG per map plus a raw dump per map: <prefix>diffuse, specular,
/// roughness (grey), height (grey, min-max normalized in the PNG only).
void write_maps(const svbrdf::SvBrdfMaps& maps, const std::filesystem::path& dir, const std::string& prefix);

/// Reassembles maps written by write_maps from the raw dumps.
svbrdf::SvBrdfMaps read_maps(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace metappear::app

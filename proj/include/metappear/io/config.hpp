// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/regimes/regimes.hpp"
#include "metappear/svbrdf/svbrdf.hpp"

namespace metappear::io {

enum class Application { Brdf, Svbrdf };

const char* to_string(Application app);
Application application_from_string(const std::string& name);

struct DataConfig {
    std::size_t train_tasks = 80;
    std::size_t test_tasks = 20;
    std::uint64_t data_seed = 0;
    std::string merl_dir;  // empty: synthetic Cook-Torrance family
};

struct OverfitSettings {
    std::size_t iterations = 83000;
    double lr = 5e-4;
};

struct FinetuneSettings {
    std::size_t steps = 1000;
    double lr_multiplier = 1.0;  // relative to the overfit rate
};

struct ExperimentConfig {
    Application application = Application::Brdf;
    std::string regime = "meta";  // meta | overfit | general | finetune
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t timing_runs = 5;

    DataConfig data;
    meta::MetaConfig meta;
    OverfitSettings overfit;
    regimes::GeneralConfig general;
    FinetuneSettings finetune;
    regimes::AblationConfig ablation;
    svbrdf::SyntheticFlashConfig flash;
    svbrdf::StepInit step_init;

    static ExperimentConfig defaults(Application app);

    /// Every field, nested by section.
    nlohmann::json to_json() const;
    /// Starts from defaults(json["application"]) and overlays `j`. Unknown
    /// keys and mistyped values are rejected.
    static ExperimentConfig from_json(const nlohmann::json& j);

    /// meta section with the experiment seed applied.
    meta::MetaConfig meta_config() const;
    void validate() const;
    std::uint64_t hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Sets a dotted key ("meta.k") to `value`, parsed as JSON when it parses and
/// taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& dotted_key, const std::string& value);

}  // namespace metappear::io

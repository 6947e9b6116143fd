// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metappear/io/checkpoint.hpp"
#include "metappear/io/config.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/nbrdf/nbrdf.hpp"
#include "metappear/svbrdf/svbrdf.hpp"

namespace metappear::app {

using NbrdfTaskPtr = std::shared_ptr<const nbrdf::NbrdfTask>;
using FlashTaskPtr = std::shared_ptr<const svbrdf::FlashTask>;

struct BrdfTasks {
    std::vector<NbrdfTaskPtr> train;
    std::vector<NbrdfTaskPtr> test;
};

/// Synthetic family of train + test materials (first `train_tasks` train),
/// or every *.binary file under data.merl_dir split 80/20 by data_seed.
BrdfTasks make_brdf_tasks(const io::ExperimentConfig& cfg);

struct FlashTasks {
    std::vector<FlashTaskPtr> train;
    std::vector<FlashTaskPtr> test;
};

FlashTasks make_flash_tasks(const io::ExperimentConfig& cfg);

/// Per-step multipliers used by the inner loop during training and adaptation.
std::vector<double> adaptation_scales(const meta::MetaConfig& cfg);

struct TrainedMeta {
    meta::MetaTrainResult result;
    io::Checkpoint checkpoint;
};

TrainedMeta train_meta(const io::ExperimentConfig& cfg, const meta::EpochCallback& on_epoch = {});

/// Loads a meta checkpoint and checks it against the configured application.
diff::MetaParams load_meta(const std::filesystem::path& path, const io::ExperimentConfig& cfg);

struct CompareRow {
    std::string task;
    std::string regime;
    double error = 0.0;
    std::size_t params = 0;   // values stored per material
    double seconds = 0.0;     // median over the timing runs
    std::size_t samples = 0;  // training samples consumed
    std::vector<double> curve;
};

struct RegimeSummary {
    std::string regime;
    double error = 0.0;    // mean over tasks
    std::size_t params = 0;
    double seconds = 0.0;  // mean over tasks
    std::size_t samples = 0;
    std::optional<double> err;  // against the "general" row when present
};

/// Every regime on every test task. BRDF: general, overfit, finetune, meta.
/// svBRDF: overfit, meta.
std::vector<CompareRow> compare(const io::ExperimentConfig& cfg, const diff::MetaParams& meta);

std::vector<RegimeSummary> summarize(const std::vector<CompareRow>& rows);

/// Rows "regime,error,params,seconds" (header optional); ERR is then computed
/// exactly as for measured rows.
std::vector<CompareRow> read_fixture(const std::filesystem::path& path);

std::string format_table(const std::vector<RegimeSummary>& summary);
void write_rows_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path);
void write_curves_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path);

double median(std::vector<double> v);

}  // namespace metappear::app

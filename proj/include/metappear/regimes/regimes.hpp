// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/inner_loop.hpp"
#include "metappear/diff/param_vector.hpp"
#include "metappear/nbrdf/nbrdf.hpp"

namespace metappear::regimes {

using diff::MetaParams;
using diff::ParamVector;
using Evaluator = std::function<double(const ParamVector&)>;

struct RegimeResult {
    std::string regime;
    ParamVector params;
    std::vector<double> curve;  // one loss per iteration
    double seconds = 0.0;       // optimizer and forward work only
    double error = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;
    std::size_t iterations = 0;
    bool diverged = false;
};

/// Single-task Adam from `init`. Stops early (diverged = true) on a
/// non-finite loss or update, keeping the curve so far.
RegimeResult run_overfit(const diff::Task& task, ParamVector init, std::size_t iterations, double lr, Rng& rng,
                         const Evaluator& evaluate = {}, double weight_decay = 0.0);

/// NBRDF overload: random uniform fan-in init drawn from `rng`.
RegimeResult run_overfit(const nbrdf::NbrdfTask& task, std::size_t iterations, double lr, Rng& rng,
                         const Evaluator& evaluate = {});

// ---------------------------------------------------------------- General

inline constexpr std::size_t kLatentDim = 10;

/// 16 -> 21 -> 21 -> 3 decoder over [h, d, z].
diff::Architecture decoder_arch(diff::Activation hidden = diff::Activation::Relu);

struct GeneralConfig {
    std::size_t iterations = 20000;
    double lr = 5e-4;
    std::size_t tasks_per_batch = 8;
    std::size_t batch_size = nbrdf::kBatchSize;
    double latent_l2 = 1e-4;
    double latent_init_std = 0.01;
    std::size_t inference_steps = 100;
    double inference_lr = 1e-2;
    std::uint64_t seed = 0;
};

struct AutoDecoder {
    ParamVector decoder;
    std::vector<std::vector<double>> latents;  // one per training task
    std::vector<double> curve;
    double seconds = 0.0;
};

/// NBRDF with the latent folded into the first-layer bias; evaluates exactly
/// like the decoder conditioned on `z`.
ParamVector fold_latent(const ParamVector& decoder, std::span<const double> z);

AutoDecoder run_general(const std::vector<const nbrdf::NbrdfTask*>& tasks, const GeneralConfig& cfg);

struct Conditioned {
    std::vector<double> latent;
    ParamVector folded;
    std::vector<double> curve;
    double seconds = 0.0;
    std::size_t samples = 0;
};

/// Auto-decoder inference: latent-only Adam with the decoder frozen.
Conditioned condition(const AutoDecoder& general, const nbrdf::NbrdfTask& task, const GeneralConfig& cfg, Rng& rng);

RegimeResult general_result(const AutoDecoder& general, const nbrdf::NbrdfTask& task, const GeneralConfig& cfg,
                            Rng& rng, const Evaluator& evaluate = {});

/// Condition on the task, then optimize every parameter of the folded NBRDF
/// for n Adam steps.
RegimeResult run_finetune(const AutoDecoder& general, const nbrdf::NbrdfTask& task, std::size_t n, double lr,
                          const GeneralConfig& cfg, Rng& rng, const Evaluator& evaluate = {});

// ---------------------------------------------------------------- Meta

/// k inner steps with the learned S. curve[t] is the loss of theta_{t+1} on
/// the first adaptation batch.
RegimeResult run_meta(const MetaParams& meta, const diff::Task& task, std::size_t k, Rng& rng,
                      const Evaluator& evaluate = {}, std::span<const double> step_scales = {});

enum class AblationMode { GeneralInitLearnedS, MetaInitAdam, FullMeta };

const char* to_string(AblationMode mode);
AblationMode ablation_mode_from_string(const std::string& name);

struct AblationConfig {
    std::size_t smart_steps = 20;  // mode b
    std::size_t adam_steps = 20;   // mode c
    double adam_lr = 5e-3;         // 10x the overfit rate
    std::size_t meta_k = 10;       // mode d
};

RegimeResult ablation(AblationMode mode, const MetaParams& meta, const AutoDecoder* general,
                      const nbrdf::NbrdfTask& task, const AblationConfig& acfg, const GeneralConfig& gcfg, Rng& rng,
                      const Evaluator& evaluate = {});

// ---------------------------------------------------------------- metrics

/// (rho_m / rho_b) / (delta_b / delta_m).
double err_index(double rho_m, double rho_b, double delta_b, double delta_m);

/// Integer round(table / samples), e.g. 1,458,000 / 5,120 -> 285.
std::size_t compression_ratio(std::size_t table_entries, std::size_t samples);

inline constexpr std::size_t kMerlTableEntries = 1'458'000;

/// Log-MAE on a fixed test-split evaluation set of the task.
Evaluator nbrdf_evaluator(const nbrdf::NbrdfTask& task, std::size_t n = 8192, std::uint64_t seed = 0);

}  // namespace metappear::regimes

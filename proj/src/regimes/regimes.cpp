// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/regimes/regimes.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "metappear/data/sampling.hpp"
#include "metappear/error.hpp"
#include "metappear/meta/meta_engine.hpp"

namespace metappear::regimes {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void finish(RegimeResult& r, const Evaluator& evaluate) {
    r.iterations = r.curve.size();
    if (evaluate) r.error = evaluate(r.params);
}

}  // namespace

RegimeResult run_overfit(const diff::Task& task, ParamVector init, std::size_t iterations, double lr, Rng& rng,
                         const Evaluator& evaluate, double weight_decay) {
    if (iterations < 1) throw invalid_argument("overfit needs at least one iteration");
    if (task.param_count() != init.size()) throw invalid_argument("initialization does not match the task");
    RegimeResult r;
    r.regime = "overfit";
    const std::size_t n = init.size();
    std::vector<double> theta = init.raw(), last_good = theta, grad(n);
    meta::Adam adam(n);
    r.curve.reserve(iterations);
    for (std::size_t it = 0; it < iterations; ++it) {
        const diff::BatchPtr batch = task.adaptation_batch(it, rng);
        const auto t0 = Clock::now();
        double loss = 0.0;
        try {
            loss = batch->loss_and_grad(theta, grad);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
            r.diverged = true;
        }
        if (!r.diverged) {
            if (weight_decay > 0.0)
                for (std::size_t i = 0; i < n; ++i) grad[i] += weight_decay * theta[i];
            adam.step(theta, grad, lr);
            r.diverged = !std::isfinite(loss) || !diff::all_finite(theta);
        }
        r.seconds += since(t0);
        if (r.diverged) break;
        r.curve.push_back(loss);
        r.samples += batch->sample_count();
        last_good = theta;
    }
    r.params = ParamVector(init.arch(), std::move(last_good));
    finish(r, evaluate);
    return r;
}

RegimeResult run_overfit(const nbrdf::NbrdfTask& task, std::size_t iterations, double lr, Rng& rng,
                         const Evaluator& evaluate) {
    ParamVector init = nbrdf::random_init(task.arch(), rng);
    return run_overfit(static_cast<const diff::Task&>(task), std::move(init), iterations, lr, rng, evaluate);
}

// ---------------------------------------------------------------- General

diff::Architecture decoder_arch(diff::Activation hidden) {
    return diff::Architecture::mlp({nbrdf::kInputDim + kLatentDim, nbrdf::kHiddenWidth, nbrdf::kHiddenWidth,
                                    nbrdf::kOutputDim},
                                   {hidden, hidden, diff::Activation::Exp});
}

ParamVector fold_latent(const ParamVector& decoder, std::span<const double> z) {
    const diff::Architecture& da = decoder.arch();
    if (!(da == decoder_arch(da.activations[0]))) throw invalid_argument("not an auto-decoder: " + da.describe());
    if (z.size() != kLatentDim) throw invalid_argument("latent must have 10 entries");
    const diff::Architecture na = nbrdf::nbrdf_arch(da.activations[0]);
    ParamVector out(na);
    const std::size_t in = da.dims[0], h = da.dims[1];
    for (std::size_t o = 0; o < h; ++o) {
        double bias = decoder[da.bias_offset(0) + o];
        for (std::size_t j = 0; j < nbrdf::kInputDim; ++j)
            out[na.weight_offset(0) + o * nbrdf::kInputDim + j] = decoder[da.weight_offset(0) + o * in + j];
        for (std::size_t l = 0; l < kLatentDim; ++l)
            bias += decoder[da.weight_offset(0) + o * in + nbrdf::kInputDim + l] * z[l];
        out[na.bias_offset(0) + o] = bias;
    }
    const std::size_t tail = da.param_count() - da.weight_offset(1);
    for (std::size_t i = 0; i < tail; ++i) out[na.weight_offset(1) + i] = decoder[da.weight_offset(1) + i];
    return out;
}

namespace {

// Appends one task's samples, conditioned on z, to a decoder sample set.
void append_conditioned(diff::SampleSet& set, std::size_t row, const std::vector<data::Sample>& samples,
                        std::span<const double> z) {
    for (std::size_t k = 0; k < samples.size(); ++k, ++row) {
        for (std::size_t j = 0; j < nbrdf::kInputDim; ++j) set.inputs(row, j) = samples[k].hd[j];
        for (std::size_t l = 0; l < kLatentDim; ++l) set.inputs(row, nbrdf::kInputDim + l) = z[l];
        for (std::size_t c = 0; c < 3; ++c) set.targets(row, c) = samples[k].target[c];
        set.weights[row] = samples[k].cos_i;
    }
}

diff::SampleSet decoder_set(std::size_t n) {
    diff::SampleSet s;
    s.inputs = diff::Matrix(n, nbrdf::kInputDim + kLatentDim);
    s.targets = diff::Matrix(n, nbrdf::kOutputDim);
    s.weights.resize(n);
    return s;
}

}  // namespace

AutoDecoder run_general(const std::vector<const nbrdf::NbrdfTask*>& tasks, const GeneralConfig& cfg) {
    if (tasks.size() < 2) throw invalid_argument("General needs at least two tasks");
    if (cfg.iterations < 1 || cfg.batch_size < 1 || cfg.tasks_per_batch < 1)
        throw invalid_argument("General needs positive iterations, batch size and tasks per batch");
    const diff::LossKind loss_kind = tasks.front()->loss_kind();
    Rng init_rng(derive_seed({cfg.seed, 0x9e1}));
    AutoDecoder ad;
    ad.decoder = nbrdf::random_init(decoder_arch(), init_rng);
    std::normal_distribution<double> normal(0.0, cfg.latent_init_std);
    ad.latents.assign(tasks.size(), std::vector<double>(kLatentDim));
    for (auto& z : ad.latents)
        for (auto& v : z) v = normal(init_rng);

    const diff::Architecture& arch = ad.decoder.arch();
    meta::Adam dec_adam(arch.param_count());
    std::vector<meta::Adam> lat_adam(tasks.size(), meta::Adam(kLatentDim));
    const std::size_t m = std::min(cfg.tasks_per_batch, tasks.size());
    std::vector<double> grad(arch.param_count()), zgrad(kLatentDim);
    ad.curve.reserve(cfg.iterations);

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Rng rng(derive_seed({cfg.seed, 0x6e0, it}));
        const auto chosen = meta::select_tasks(tasks.size(), m, cfg.seed ^ 0x6e0, it);
        diff::SampleSet set = decoder_set(cfg.batch_size);
        std::vector<std::size_t> first_row(m + 1, 0);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t count = cfg.batch_size / m + (j < cfg.batch_size % m ? 1 : 0);
            const auto samples = data::sample_batch(tasks[chosen[j]]->source(), count, rng, data::SplitPart::Train);
            append_conditioned(set, first_row[j], samples, ad.latents[chosen[j]]);
            first_row[j + 1] = first_row[j] + count;
        }
        std::vector<double> input_grad(cfg.batch_size * arch.input_dim());
        const auto t0 = Clock::now();
        const double loss = diff::mlp_loss_and_grad(arch, ad.decoder.values(), set, loss_kind, grad, input_grad);
        dec_adam.step(ad.decoder.values(), grad, cfg.lr);
        for (std::size_t j = 0; j < m; ++j) {
            auto& z = ad.latents[chosen[j]];
            for (std::size_t l = 0; l < kLatentDim; ++l) zgrad[l] = 2.0 * cfg.latent_l2 * z[l];
            for (std::size_t row = first_row[j]; row < first_row[j + 1]; ++row)
                for (std::size_t l = 0; l < kLatentDim; ++l)
                    zgrad[l] += input_grad[row * arch.input_dim() + nbrdf::kInputDim + l];
            lat_adam[chosen[j]].step(z, zgrad, cfg.lr);
        }
        ad.seconds += since(t0);
        if (!ad.decoder.all_finite()) throw numerical_error("General training diverged at iteration " + std::to_string(it), it);
        ad.curve.push_back(loss);
    }
    return ad;
}

Conditioned condition(const AutoDecoder& general, const nbrdf::NbrdfTask& task, const GeneralConfig& cfg, Rng& rng) {
    const diff::Architecture& arch = general.decoder.arch();
    Conditioned c;
    c.latent.assign(kLatentDim, 0.0);
    meta::Adam adam(kLatentDim);
    std::vector<double> grad(arch.param_count()), zgrad(kLatentDim);
    std::vector<double> input_grad(cfg.batch_size * arch.input_dim());
    for (std::size_t s = 0; s < cfg.inference_steps; ++s) {
        const auto samples = data::sample_batch(task.source(), cfg.batch_size, rng, data::SplitPart::Train);
        diff::SampleSet set = decoder_set(samples.size());
        append_conditioned(set, 0, samples, c.latent);
        const auto t0 = Clock::now();
        const double loss =
            diff::mlp_loss_and_grad(arch, general.decoder.values(), set, task.loss_kind(), grad, input_grad);
        for (std::size_t l = 0; l < kLatentDim; ++l) zgrad[l] = 2.0 * cfg.latent_l2 * c.latent[l];
        for (std::size_t row = 0; row < samples.size(); ++row)
            for (std::size_t l = 0; l < kLatentDim; ++l)
                zgrad[l] += input_grad[row * arch.input_dim() + nbrdf::kInputDim + l];
        adam.step(c.latent, zgrad, cfg.inference_lr);
        c.seconds += since(t0);
        c.curve.push_back(loss);
        c.samples += samples.size();
    }
    const auto t0 = Clock::now();
    c.folded = fold_latent(general.decoder, c.latent);
    c.seconds += since(t0);
    return c;
}

RegimeResult general_result(const AutoDecoder& general, const nbrdf::NbrdfTask& task, const GeneralConfig& cfg,
                            Rng& rng, const Evaluator& evaluate) {
    Conditioned c = condition(general, task, cfg, rng);
    RegimeResult r;
    r.regime = "general";
    r.params = std::move(c.folded);
    r.curve = std::move(c.curve);
    r.seconds = c.seconds;
    r.samples = c.samples;
    finish(r, evaluate);
    return r;
}

RegimeResult run_finetune(const AutoDecoder& general, const nbrdf::NbrdfTask& task, std::size_t n, double lr,
                          const GeneralConfig& cfg, Rng& rng, const Evaluator& evaluate) {
    Conditioned c = condition(general, task, cfg, rng);
    RegimeResult r;
    if (n == 0) {
        r.params = std::move(c.folded);
    } else {
        r = run_overfit(static_cast<const diff::Task&>(task), std::move(c.folded), n, lr, rng);
    }
    r.regime = "finetune";
    r.curve.insert(r.curve.begin(), c.curve.begin(), c.curve.end());
    r.seconds += c.seconds;
    r.samples += c.samples;
    finish(r, evaluate);
    return r;
}

// ---------------------------------------------------------------- Meta

RegimeResult run_meta(const MetaParams& meta, const diff::Task& task, std::size_t k, Rng& rng,
                      const Evaluator& evaluate, std::span<const double> step_scales) {
    meta.validate();
    if (task.param_count() != meta.size()) throw invalid_argument("meta parameters do not match the task");
    if (!step_scales.empty() && step_scales.size() != k) throw invalid_argument("step scale count does not match k");
    std::vector<diff::BatchPtr> batches;
    RegimeResult r;
    r.regime = "meta";
    for (std::size_t t = 0; t < k; ++t) {
        batches.push_back(task.adaptation_batch(t, rng));
        r.samples += batches.back()->sample_count();
    }
    const std::size_t n = meta.size();
    std::vector<double> theta = meta.init.raw(), grad(n);
    std::vector<std::vector<double>> iterates;
    iterates.reserve(k);
    const auto t0 = Clock::now();
    for (std::size_t t = 0; t < k; ++t) {
        batches[t]->loss_and_grad(theta, grad);
        const double c = step_scales.empty() ? 1.0 : step_scales[t];
        for (std::size_t i = 0; i < n; ++i) theta[i] -= c * meta.step_sizes[i] * grad[i];
        if (!diff::all_finite(theta)) {
            r.diverged = true;
            break;
        }
        iterates.push_back(theta);
    }
    r.seconds = since(t0);
    for (const auto& it : iterates) r.curve.push_back(batches.front()->loss(it));
    r.params = ParamVector(meta.init.arch(), iterates.empty() ? meta.init.raw() : iterates.back());
    finish(r, evaluate);
    return r;
}

const char* to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::GeneralInitLearnedS: return "general-init+learned-s";
        case AblationMode::MetaInitAdam: return "meta-init+adam";
        case AblationMode::FullMeta: return "full-meta";
    }
    return "?";
}

AblationMode ablation_mode_from_string(const std::string& name) {
    for (AblationMode m : {AblationMode::GeneralInitLearnedS, AblationMode::MetaInitAdam, AblationMode::FullMeta})
        if (name == to_string(m)) return m;
    throw invalid_argument("unknown ablation mode '" + name + "'");
}

RegimeResult ablation(AblationMode mode, const MetaParams& meta, const AutoDecoder* general,
                      const nbrdf::NbrdfTask& task, const AblationConfig& acfg, const GeneralConfig& gcfg, Rng& rng,
                      const Evaluator& evaluate) {
    RegimeResult r;
    switch (mode) {
        case AblationMode::GeneralInitLearnedS: {
            if (general == nullptr) throw invalid_argument("ablation mode b needs a trained General model");
            Conditioned c = condition(*general, task, gcfg, rng);
            const MetaParams mixed{std::move(c.folded), meta.step_sizes};
            r = run_meta(mixed, task, acfg.smart_steps, rng);
            r.seconds += c.seconds;
            r.samples += c.samples;
            break;
        }
        case AblationMode::MetaInitAdam:
            if (acfg.adam_steps == 0) {
                r.params = meta.init;
            } else {
                r = run_overfit(static_cast<const diff::Task&>(task), meta.init, acfg.adam_steps, acfg.adam_lr, rng);
            }
            break;
        case AblationMode::FullMeta: r = run_meta(meta, task, acfg.meta_k, rng); break;
    }
    r.regime = std::string("ablation:") + to_string(mode);
    finish(r, evaluate);
    return r;
}

// ---------------------------------------------------------------- metrics

double err_index(double rho_m, double rho_b, double delta_b, double delta_m) {
    if (!(rho_m > 0.0) || !(rho_b > 0.0) || !(delta_b > 0.0) || !(delta_m > 0.0))
        throw invalid_argument("ERR needs positive runtimes and errors");
    return (rho_m / rho_b) / (delta_b / delta_m);
}

std::size_t compression_ratio(std::size_t table_entries, std::size_t samples) {
    if (samples == 0) throw invalid_argument("sample count must be positive");
    return (table_entries + samples / 2) / samples;
}

Evaluator nbrdf_evaluator(const nbrdf::NbrdfTask& task, std::size_t n, std::uint64_t seed) {
    auto set = std::make_shared<const std::vector<data::Sample>>(task.evaluation_set(n, seed));
    const bool cosine = task.loss_kind() != diff::LossKind::LogMae;
    return [set, cosine](const ParamVector& p) { return nbrdf::evaluate_log_mae(p, *set, cosine); };
}

}  // namespace metappear::regimes

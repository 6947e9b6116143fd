// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/nbrdf/nbrdf.hpp"

#include <cmath>
#include <string>

#include "metappear/error.hpp"

namespace metappear::nbrdf {

using diff::Activation;
using diff::Architecture;
using diff::ParamVector;

Architecture nbrdf_arch(Activation hidden) {
    return Architecture::mlp({kInputDim, kHiddenWidth, kHiddenWidth, kOutputDim},
                             {hidden, hidden, Activation::Exp});
}

void check_nbrdf_arch(const Architecture& arch) {
    const bool ok = arch.kind == diff::ArchKind::Mlp && arch.dims.size() == 4 && arch.dims[0] == kInputDim &&
                    arch.dims[1] == kHiddenWidth && arch.dims[2] == kHiddenWidth && arch.dims[3] == kOutputDim &&
                    arch.activations.back() == Activation::Exp;
    if (!ok) throw invalid_argument("not an NBRDF architecture: " + arch.describe());
    if (arch.param_count() != kParamCount)
        throw invalid_argument("NBRDF parameter count " + std::to_string(arch.param_count()) + " != 675");
}

ParamVector random_init(const Architecture& arch, Rng& rng) {
    ParamVector p(arch);
    if (arch.kind != diff::ArchKind::Mlp) throw invalid_argument("random_init needs an mlp");
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(arch.dims[l]));
        const std::size_t off = arch.weight_offset(l);
        for (std::size_t i = 0; i < arch.dims[l] * arch.dims[l + 1]; ++i) p[off + i] = uniform(rng, -bound, bound);
    }
    return p;
}

Rgb eval_nbrdf(const ParamVector& params, const data::Sample& s) {
    check_nbrdf_arch(params.arch());
    diff::Matrix in(1, kInputDim);
    for (std::size_t j = 0; j < kInputDim; ++j) in(0, j) = s.hd[j];
    const diff::Matrix out = diff::forward(params, in);
    return {out(0, 0), out(0, 1), out(0, 2)};
}

Rgb eval_nbrdf(const ParamVector& params, const Vec3& wi, const Vec3& wo) {
    if (wi.z <= 0.0 || wo.z <= 0.0) return {0.0, 0.0, 0.0};
    data::Sample s;
    s.hd = data::half_diff_vectors(data::dirs_to_rusin(wi, wo));
    return eval_nbrdf(params, s);
}

double log_mae_loss(std::span<const Rgb> pred, std::span<const Rgb> target, std::span<const double> cos_i,
                    bool cosine_weighted) {
    if (pred.size() != target.size() || (cosine_weighted && cos_i.size() != pred.size()))
        throw invalid_argument("log-MAE batch length mismatch");
    if (pred.empty()) throw invalid_argument("empty batch");
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double w = cosine_weighted ? cos_i[k] : 1.0;
        for (std::size_t c = 0; c < 3; ++c) {
            if (target[k][c] < 0.0) throw invalid_argument("negative target at sample " + std::to_string(k));
            sum += std::abs(std::log1p(pred[k][c] * w) - std::log1p(target[k][c] * w));
        }
    }
    return sum / static_cast<double>(3 * pred.size());
}

diff::SampleSet to_sample_set(std::span<const data::Sample> samples) {
    diff::SampleSet s;
    s.inputs = diff::Matrix(samples.size(), kInputDim);
    s.targets = diff::Matrix(samples.size(), kOutputDim);
    s.weights.resize(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        for (std::size_t j = 0; j < kInputDim; ++j) s.inputs(k, j) = samples[k].hd[j];
        for (std::size_t c = 0; c < kOutputDim; ++c) s.targets(k, c) = samples[k].target[c];
        s.weights[k] = samples[k].cos_i;
    }
    return s;
}

std::vector<Rgb> predict(const ParamVector& params, std::span<const data::Sample> samples) {
    const diff::SampleSet set = to_sample_set(samples);
    const diff::Matrix out = diff::forward(params, set.inputs);
    std::vector<Rgb> r(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) r[k] = {out(k, 0), out(k, 1), out(k, 2)};
    return r;
}

double evaluate_log_mae(const ParamVector& params, std::span<const data::Sample> samples, bool cosine_weighted) {
    const std::vector<Rgb> pred = predict(params, samples);
    std::vector<Rgb> target(samples.size());
    std::vector<double> cosines(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        target[k] = samples[k].target;
        cosines[k] = samples[k].cos_i;
    }
    return log_mae_loss(pred, target, cosines, cosine_weighted);
}

NbrdfTask::NbrdfTask(data::BrdfSource source, Architecture arch, std::size_t batch_size, diff::LossKind loss)
    : source_(std::move(source)), arch_(std::move(arch)), batch_size_(batch_size), loss_(loss) {
    check_nbrdf_arch(arch_);
    if (batch_size_ == 0) throw invalid_argument("batch size must be positive");
}

diff::BatchPtr NbrdfTask::make_batch(std::vector<data::Sample> samples) const {
    return std::make_shared<diff::MlpBatch>(arch_, to_sample_set(samples), loss_);
}

diff::BatchPtr NbrdfTask::adaptation_batch(std::size_t /*step*/, Rng& rng) const {
    return make_batch(data::sample_batch(source_, batch_size_, rng, data::SplitPart::Train));
}

diff::BatchPtr NbrdfTask::heldout_batch(Rng& rng) const {
    return make_batch(data::sample_batch(source_, batch_size_, rng, data::SplitPart::Test));
}

std::vector<data::Sample> NbrdfTask::evaluation_set(std::size_t n, std::uint64_t seed) const {
    Rng rng(derive_seed({seed, source_.split_seed(), 0xe7a1}));
    return data::sample_batch(source_, n, rng, data::SplitPart::Test);
}

}  // namespace metappear::nbrdf

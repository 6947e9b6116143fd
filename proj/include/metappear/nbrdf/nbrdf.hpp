// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metappear/data/sampling.hpp"
#include "metappear/diff/batch.hpp"
#include "metappear/diff/mlp.hpp"
#include "metappear/diff/param_vector.hpp"

namespace metappear::nbrdf {

inline constexpr std::size_t kInputDim = 6;
inline constexpr std::size_t kHiddenWidth = 21;
inline constexpr std::size_t kOutputDim = 3;
inline constexpr std::size_t kParamCount = 675;
inline constexpr std::size_t kBatchSize = 512;

/// 6 -> 21 -> 21 -> 3 with the given hidden activation and an exponential
/// output. Relu for training; Softplus for finite-difference checks.
diff::Architecture nbrdf_arch(diff::Activation hidden = diff::Activation::Relu);

/// Throws unless `arch` is a 6-21-21-3 mlp with exponential output.
void check_nbrdf_arch(const diff::Architecture& arch);

/// Uniform fan-in initialization, bounds +-sqrt(6 / fan_in); zero biases.
diff::ParamVector random_init(const diff::Architecture& arch, Rng& rng);

Rgb eval_nbrdf(const diff::ParamVector& params, const data::Sample& s);
Rgb eval_nbrdf(const diff::ParamVector& params, const Vec3& wi, const Vec3& wo);

/// Mean over samples and channels of |log(1 + p w) - log(1 + t w)|,
/// w = cos_i when `cosine_weighted`, else 1.
double log_mae_loss(std::span<const Rgb> pred, std::span<const Rgb> target,
                    std::span<const double> cos_i, bool cosine_weighted = true);

diff::SampleSet to_sample_set(std::span<const data::Sample> samples);

/// Predictions for a batch of samples.
std::vector<Rgb> predict(const diff::ParamVector& params, std::span<const data::Sample> samples);

/// Held-out reconstruction error of `params` on `samples`.
double evaluate_log_mae(const diff::ParamVector& params, std::span<const data::Sample> samples,
                        bool cosine_weighted = true);

/// One BRDF as an inner-loop task: adaptation batches come from the training
/// side of the angular split, held-out batches from the test side.
class NbrdfTask final : public diff::Task {
public:
    explicit NbrdfTask(data::BrdfSource source,
                       diff::Architecture arch = nbrdf_arch(),
                       std::size_t batch_size = kBatchSize,
                       diff::LossKind loss = diff::LossKind::LogMaeCosine);

    std::size_t param_count() const override { return arch_.param_count(); }
    diff::BatchPtr adaptation_batch(std::size_t step, Rng& rng) const override;
    diff::BatchPtr heldout_batch(Rng& rng) const override;
    std::string name() const override { return source_.name(); }

    const data::BrdfSource& source() const { return source_; }
    const diff::Architecture& arch() const { return arch_; }
    std::size_t batch_size() const { return batch_size_; }
    diff::LossKind loss_kind() const { return loss_; }

    /// Deterministic held-out evaluation set (test side of the split).
    std::vector<data::Sample> evaluation_set(std::size_t n, std::uint64_t seed) const;
    diff::BatchPtr make_batch(std::vector<data::Sample> samples) const;

private:
    data::BrdfSource source_;
    diff::Architecture arch_;
    std::size_t batch_size_;
    diff::LossKind loss_;
};

}  // namespace metappear::nbrdf

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/inner_loop.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/render/flash.hpp"
#include "metappear/svbrdf/maps.hpp"

namespace metappear::svbrdf {

inline constexpr double kHeightPrior = 0.01;

/// Flattened pixel indices y * R + x.
using PixelList = std::vector<std::uint32_t>;

/// Sum over `pixels` and channels of |render - target|, plus lambda times
/// the sum of squared forward differences of the height map.
double svbrdf_loss(const SvBrdfMaps& maps, const render::Image& target, const PixelList& pixels,
                   const render::FlashConfig& cfg, double lambda = kHeightPrior);

double svbrdf_loss_and_grad(std::span<const double> raw, std::size_t resolution, const render::Image& target,
                            const PixelList& pixels, const render::FlashConfig& cfg, double lambda,
                            std::span<double> grad);

void svbrdf_hessian_vector(std::span<const double> raw, std::size_t resolution, const render::Image& target,
                           const PixelList& pixels, const render::FlashConfig& cfg, double lambda,
                           std::span<const double> v, std::span<double> out);

/// Held-out / adaptation split: each pixel is held out with probability
/// `fraction`, decided by a hash of (seed, pixel). Both parts are non-empty.
struct PixelSplit {
    PixelList adaptation;
    PixelList heldout;
};

PixelSplit split_pixels(std::size_t resolution, std::uint64_t seed, double fraction = 0.2);

struct FlashTaskData {
    render::Image target;
    render::FlashConfig cfg;
    std::size_t resolution = 0;
    PixelSplit split;
    std::uint64_t split_seed = 0;
    double heldout_fraction = 0.2;
    double lambda = kHeightPrior;
    std::optional<SvBrdfMaps> truth;
};

class FlashBatch final : public diff::Batch {
public:
    FlashBatch(std::shared_ptr<const FlashTaskData> data, bool heldout);

    std::size_t sample_count() const override { return pixels().size(); }
    double loss(std::span<const double> params) const override;
    double loss_and_grad(std::span<const double> params, std::span<double> grad) const override;
    void hessian_vector(std::span<const double> params, std::span<const double> v,
                        std::span<double> out) const override;

    const PixelList& pixels() const { return heldout_ ? data_->split.heldout : data_->split.adaptation; }

private:
    std::shared_ptr<const FlashTaskData> data_;
    bool heldout_;
};

/// One flash photograph of a flat sample. Every adaptation batch covers the
/// whole adaptation subset; the held-out batch covers the held-out subset.
class FlashTask final : public diff::Task {
public:
    FlashTask(render::Image target, const render::FlashConfig& cfg, std::uint64_t split_seed,
              double heldout_fraction = 0.2, double lambda = kHeightPrior,
              std::optional<SvBrdfMaps> truth = std::nullopt, std::string name = "flash");

    std::size_t param_count() const override { return kChannels * data_->resolution * data_->resolution; }
    diff::BatchPtr adaptation_batch(std::size_t step, Rng& rng) const override;
    diff::BatchPtr heldout_batch(Rng& rng) const override;
    std::string name() const override { return name_; }

    const render::Image& target() const { return data_->target; }
    const render::FlashConfig& config() const { return data_->cfg; }
    std::size_t resolution() const { return data_->resolution; }
    const PixelSplit& split() const { return data_->split; }
    std::uint64_t split_seed() const { return data_->split_seed; }
    double heldout_fraction() const { return data_->heldout_fraction; }
    double lambda() const { return data_->lambda; }
    const std::optional<SvBrdfMaps>& truth() const { return data_->truth; }

private:
    std::shared_ptr<const FlashTaskData> data_;
    diff::BatchPtr adapt_;
    diff::BatchPtr heldout_;
    std::string name_;
};

struct SyntheticFlashConfig {
    std::size_t resolution = kDefaultResolution;
    render::FlashConfig flash;
    double heldout_fraction = 0.2;
    double lambda = kHeightPrior;
};

/// Stationary maps: per channel a random mean plus a few low-frequency
/// sinusoids of random direction and phase.
SvBrdfMaps random_stationary_maps(std::size_t resolution, Rng& rng);

/// Unstructured start for overfitting: material raws ~ N(0, 1), height ~ N(0, 0.1).
SvBrdfMaps random_maps(std::size_t resolution, Rng& rng);

std::vector<FlashTask> make_synthetic_flash_tasks(std::size_t n, std::uint64_t seed,
                                                  const SyntheticFlashConfig& cfg = {});

/// Plausible constant material used as the starting meta-initialization.
SvBrdfMaps neutral_maps(std::size_t resolution);

/// One meta-parameter group per map channel, so the meta-initialization and
/// step sizes are the same at every texel.
meta::ParamTying channel_tying(std::size_t resolution);

/// Initial step sizes per channel group. The material groups never receive
/// a meta-gradient when held-out pixels are disjoint from adaptation pixels,
/// so these values are kept for the whole of meta-training.
struct StepInit {
    double diffuse = 10.0;
    double specular = 0.1;
    double roughness = 0.1;
    double height = 0.03;
};

/// Meta-parameters over the map grid: `init` at every texel and per-group
/// constant step sizes.
diff::MetaParams initial_svbrdf_meta(const SvBrdfMaps& init, const StepInit& steps = {});

/// Mean |render - target| over the held-out pixels and channels.
double heldout_photometric_error(const SvBrdfMaps& maps, const FlashTask& task);

struct SvBrdfFit {
    SvBrdfMaps maps;
    render::Image render;
    double seconds = 0.0;
};

/// k inner steps of the learned update from the meta-initialization, with
/// optional per-step multipliers (see meta::inner_step_scales).
SvBrdfFit meta_fit_svbrdf(const diff::MetaParams& meta, const FlashTask& task, std::size_t k, Rng& rng,
                          std::span<const double> step_scales = {});

/// Adam on the adaptation pixels from random maps.
SvBrdfFit overfit_svbrdf(const FlashTask& task, std::size_t iterations, double lr, Rng& rng);

/// Pearson correlation between the diffuse-map luminance and the flash
/// falloff pattern. Near zero when no shading is baked into the albedo.
double diffuse_falloff_correlation(const SvBrdfMaps& maps, const render::FlashConfig& cfg);

}  // namespace metappear::svbrdf

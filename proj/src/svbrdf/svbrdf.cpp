// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/svbrdf/svbrdf.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "metappear/error.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/regimes/regimes.hpp"

namespace metappear::svbrdf {

namespace {

void check_inputs(std::size_t raw_size, std::size_t r, const render::Image& target, const PixelList& pixels) {
    if (r == 0) throw invalid_argument("map resolution must be positive");
    if (raw_size != kChannels * r * r)
        throw invalid_argument("map buffer holds " + std::to_string(raw_size) + " values, expected " +
                               std::to_string(kChannels * r * r));
    if (target.width != r || target.height != r) throw invalid_argument("target image does not match the map size");
    for (std::uint32_t p : pixels)
        if (p >= r * r) throw invalid_argument("pixel index " + std::to_string(p) + " out of range");
}

// Per-pixel Jet over the 7 material raws and the two height slopes; the
// slope gradients are scattered onto the height stencil.
template <class S>
S loss_kernel(std::span<const S> raw, std::size_t r, const render::Image& target, const PixelList& pixels,
              const render::FlashConfig& cfg, double lambda, std::span<S> grad) {
    using J = diff::Jet<S, 9>;
    const std::size_t np = r * r;
    const S* height = raw.data() + kHeight * np;
    for (auto& g : grad) g = S(0.0);
    S total(0.0);
    J local[7];
    J out[3];
    for (std::uint32_t p : pixels) {
        const std::size_t x = p % r, y = p / r;
        for (std::size_t c = 0; c < 7; ++c) local[c] = J::variable(raw[c * np + p], c);
        const HeightStencil s = height_stencil(x, y, r);
        const J dx = J::variable(s.weight[0] * (height[s.idx[0][1]] - height[s.idx[0][0]]), 7);
        const J dy = J::variable(s.weight[1] * (height[s.idx[1][1]] - height[s.idx[1][0]]), 8);
        render::shade_flash_texel<J>(local, dx, dy, render::flash_light_offset(x, y, r, cfg), cfg.intensity, out);
        J l(0.0);
        for (std::size_t k = 0; k < 3; ++k) l += abs(out[k] - target.at(x, y, k));
        if (!std::isfinite(diff::primal(l.v))) throw numerical_error("non-finite loss at pixel " + std::to_string(p), p);
        total += l.v;
        if (grad.empty()) continue;
        for (std::size_t c = 0; c < 7; ++c) grad[c * np + p] += l.g[c];
        S* gh = grad.data() + kHeight * np;
        for (std::size_t axis = 0; axis < 2; ++axis) {
            const S t = s.weight[axis] * l.g[7 + axis];
            gh[s.idx[axis][1]] += t;
            gh[s.idx[axis][0]] -= t;
        }
    }
    if (lambda != 0.0) {
        for (std::size_t y = 0; y < r; ++y)
            for (std::size_t x = 0; x < r; ++x) {
                const std::size_t i = y * r + x;
                const std::size_t nb[2] = {x + 1 < r ? i + 1 : i, y + 1 < r ? i + r : i};
                for (std::size_t j : nb) {
                    if (j == i) continue;
                    const S d = height[j] - height[i];
                    total += lambda * d * d;
                    if (grad.empty()) continue;
                    grad[kHeight * np + j] += 2.0 * lambda * d;
                    grad[kHeight * np + i] -= 2.0 * lambda * d;
                }
            }
    }
    return total;
}

double logit(double v) { return unsquash_albedo(v); }

// Sum of a few random low-frequency plane waves, unit peak amplitude.
std::vector<double> wave_field(std::size_t r, Rng& rng) {
    constexpr int kWaves = 4;
    std::vector<double> f(r * r, 0.0);
    for (int w = 0; w < kWaves; ++w) {
        const double freq = uniform(rng, 2.0, 8.0);
        const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double kx = 2.0 * std::numbers::pi * freq * std::cos(angle) / static_cast<double>(r);
        const double ky = 2.0 * std::numbers::pi * freq * std::sin(angle) / static_cast<double>(r);
        for (std::size_t y = 0; y < r; ++y)
            for (std::size_t x = 0; x < r; ++x)
                f[y * r + x] += std::sin(kx * static_cast<double>(x) + ky * static_cast<double>(y) + phase) / kWaves;
    }
    return f;
}

}  // namespace

double svbrdf_loss_and_grad(std::span<const double> raw, std::size_t r, const render::Image& target,
                            const PixelList& pixels, const render::FlashConfig& cfg, double lambda,
                            std::span<double> grad) {
    check_inputs(raw.size(), r, target, pixels);
    if (!grad.empty() && grad.size() != raw.size()) throw invalid_argument("gradient buffer has wrong length");
    return loss_kernel<double>(raw, r, target, pixels, cfg, lambda, grad);
}

double svbrdf_loss(const SvBrdfMaps& maps, const render::Image& target, const PixelList& pixels,
                   const render::FlashConfig& cfg, double lambda) {
    return svbrdf_loss_and_grad(maps.raw, maps.resolution, target, pixels, cfg, lambda, {});
}

void svbrdf_hessian_vector(std::span<const double> raw, std::size_t r, const render::Image& target,
                           const PixelList& pixels, const render::FlashConfig& cfg, double lambda,
                           std::span<const double> v, std::span<double> out) {
    check_inputs(raw.size(), r, target, pixels);
    if (v.size() != raw.size() || out.size() != raw.size())
        throw invalid_argument("hessian-vector buffers have wrong length");
    using D = diff::Dual<double>;
    std::vector<D> p(raw.size()), g(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) p[i] = D(raw[i], v[i]);
    loss_kernel<D>(std::span<const D>(p), r, target, pixels, cfg, lambda, std::span<D>(g));
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = g[i].d;
}

PixelSplit split_pixels(std::size_t r, std::uint64_t seed, double fraction) {
    if (r * r < 2) throw invalid_argument("need at least two pixels to split");
    if (!(fraction > 0.0 && fraction < 1.0)) throw invalid_argument("held-out fraction must be in (0, 1)");
    PixelSplit s;
    for (std::uint32_t i = 0; i < r * r; ++i) {
        const double u = static_cast<double>(derive_seed({seed, i}) >> 11) * 0x1.0p-53;
        (u < fraction ? s.heldout : s.adaptation).push_back(i);
    }
    if (s.heldout.empty()) {
        s.heldout.push_back(s.adaptation.back());
        s.adaptation.pop_back();
    } else if (s.adaptation.empty()) {
        s.adaptation.push_back(s.heldout.back());
        s.heldout.pop_back();
    }
    return s;
}

FlashBatch::FlashBatch(std::shared_ptr<const FlashTaskData> data, bool heldout)
    : data_(std::move(data)), heldout_(heldout) {}

double FlashBatch::loss(std::span<const double> params) const {
    return svbrdf_loss_and_grad(params, data_->resolution, data_->target, pixels(), data_->cfg, data_->lambda, {});
}

double FlashBatch::loss_and_grad(std::span<const double> params, std::span<double> grad) const {
    if (grad.size() != params.size()) throw invalid_argument("gradient buffer has wrong length");
    return svbrdf_loss_and_grad(params, data_->resolution, data_->target, pixels(), data_->cfg, data_->lambda, grad);
}

void FlashBatch::hessian_vector(std::span<const double> params, std::span<const double> v,
                                std::span<double> out) const {
    svbrdf_hessian_vector(params, data_->resolution, data_->target, pixels(), data_->cfg, data_->lambda, v, out);
}

FlashTask::FlashTask(render::Image target, const render::FlashConfig& cfg, std::uint64_t split_seed,
                     double heldout_fraction, double lambda, std::optional<SvBrdfMaps> truth, std::string name)
    : name_(std::move(name)) {
    cfg.validate();
    render::validate(target);
    if (target.width != target.height) throw invalid_argument("flash target must be square");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw invalid_argument("height prior weight must be >= 0");
    auto d = std::make_shared<FlashTaskData>();
    d->resolution = target.width;
    d->target = std::move(target);
    d->cfg = cfg;
    d->split = split_pixels(d->resolution, split_seed, heldout_fraction);
    d->split_seed = split_seed;
    d->heldout_fraction = heldout_fraction;
    d->lambda = lambda;
    if (truth && truth->resolution != d->resolution) throw invalid_argument("ground-truth maps do not match the target");
    d->truth = std::move(truth);
    data_ = d;
    adapt_ = std::make_shared<FlashBatch>(data_, false);
    heldout_ = std::make_shared<FlashBatch>(data_, true);
}

diff::BatchPtr FlashTask::adaptation_batch(std::size_t, Rng&) const { return adapt_; }
diff::BatchPtr FlashTask::heldout_batch(Rng&) const { return heldout_; }

SvBrdfMaps random_stationary_maps(std::size_t r, Rng& rng) {
    SvBrdfMaps m(r);
    const std::size_t np = r * r;
    auto fill = [&](std::size_t channel, double base_raw, double amp, const std::vector<double>& field) {
        for (std::size_t i = 0; i < np; ++i) m.raw[channel * np + i] = base_raw + amp * field[i];
    };

    const std::vector<double> kd_field = wave_field(r, rng);
    const double kd_amp = uniform(rng, 0.2, 1.2);
    for (std::size_t c = 0; c < 3; ++c) fill(kDiffuse + c, logit(uniform(rng, 0.05, 0.8)), kd_amp, kd_field);

    const std::vector<double> ks_field = wave_field(r, rng);
    const double ks_amp = uniform(rng, 0.1, 0.8);
    const double ks = uniform(rng, 0.02, 0.5);
    for (std::size_t c = 0; c < 3; ++c) fill(kSpecular + c, logit(ks * uniform(rng, 0.9, 1.1)), ks_amp, ks_field);

    fill(kRoughness, unsquash_roughness(uniform(rng, 0.1, 0.6)), uniform(rng, 0.1, 0.6), wave_field(r, rng));
    fill(kHeight, 0.0, uniform(rng, 0.1, 1.0), wave_field(r, rng));
    return m;
}

SvBrdfMaps random_maps(std::size_t r, Rng& rng) {
    SvBrdfMaps m(r);
    const std::size_t np = r * r;
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < kHeight * np; ++i) m.raw[i] = unit(rng);
    for (std::size_t i = kHeight * np; i < kChannels * np; ++i) m.raw[i] = 0.1 * unit(rng);
    return m;
}

SvBrdfMaps neutral_maps(std::size_t r) {
    SvBrdfMaps m(r);
    const std::size_t np = r * r;
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            m.raw[(kDiffuse + c) * np + i] = logit(0.3);
            m.raw[(kSpecular + c) * np + i] = logit(0.1);
        }
        m.raw[kRoughness * np + i] = unsquash_roughness(0.3);
    }
    return m;
}

std::vector<FlashTask> make_synthetic_flash_tasks(std::size_t n, std::uint64_t seed, const SyntheticFlashConfig& cfg) {
    if (n == 0) throw invalid_argument("need at least one flash task");
    std::vector<FlashTask> tasks;
    tasks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed({seed, i, 0}));
        SvBrdfMaps maps = random_stationary_maps(cfg.resolution, rng);
        render::Image target = render::render_flash(maps, cfg.flash);
        tasks.emplace_back(std::move(target), cfg.flash, derive_seed({seed, i, 1}), cfg.heldout_fraction, cfg.lambda,
                           std::move(maps), "flash-" + std::to_string(i));
    }
    return tasks;
}

meta::ParamTying channel_tying(std::size_t r) {
    meta::ParamTying t;
    t.groups = kChannels;
    t.group.resize(kChannels * r * r);
    for (std::size_t i = 0; i < t.group.size(); ++i) t.group[i] = static_cast<std::uint32_t>(i / (r * r));
    return t;
}

diff::MetaParams initial_svbrdf_meta(const SvBrdfMaps& init, const StepInit& steps) {
    diff::MetaParams m = diff::MetaParams::with_constant_step(init.params(), 0.0);
    const std::size_t np = init.pixel_count();
    for (std::size_t i = 0; i < m.step_sizes.size(); ++i) {
        const std::size_t c = i / np;
        m.step_sizes[i] = c < kSpecular    ? steps.diffuse
                          : c < kRoughness ? steps.specular
                          : c == kRoughness ? steps.roughness
                                            : steps.height;
    }
    return m;
}

double heldout_photometric_error(const SvBrdfMaps& maps, const FlashTask& task) {
    if (maps.resolution != task.resolution()) throw invalid_argument("maps do not match the task resolution");
    const render::Image img = render::render_flash(maps, task.config());
    const auto& pixels = task.split().heldout;
    double sum = 0.0;
    for (std::uint32_t p : pixels)
        for (std::size_t c = 0; c < 3; ++c) sum += std::abs(img.data[3 * p + c] - task.target().data[3 * p + c]);
    return sum / static_cast<double>(3 * pixels.size());
}

SvBrdfFit meta_fit_svbrdf(const diff::MetaParams& meta, const FlashTask& task, std::size_t k, Rng& rng,
                          std::span<const double> step_scales) {
    meta::AdaptResult a = meta::adapt(meta, task, k, rng, step_scales);
    SvBrdfFit fit;
    fit.maps = SvBrdfMaps::from_params(a.adapted);
    fit.render = render::render_flash(fit.maps, task.config());
    fit.seconds = a.seconds;
    return fit;
}

SvBrdfFit overfit_svbrdf(const FlashTask& task, std::size_t iterations, double lr, Rng& rng) {
    regimes::RegimeResult r = regimes::run_overfit(task, random_maps(task.resolution(), rng).params(), iterations, lr, rng);
    if (r.diverged) throw numerical_error("overfit diverged", r.curve.size());
    SvBrdfFit fit;
    fit.maps = SvBrdfMaps::from_params(r.params);
    fit.render = render::render_flash(fit.maps, task.config());
    fit.seconds = r.seconds;
    return fit;
}

double diffuse_falloff_correlation(const SvBrdfMaps& maps, const render::FlashConfig& cfg) {
    const std::size_t r = maps.resolution;
    const std::vector<double> f = render::flash_falloff(r, cfg);
    std::vector<double> lum(r * r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            const Rgb kd = maps.diffuse(x, y);
            lum[y * r + x] = 0.2126 * kd[0] + 0.7152 * kd[1] + 0.0722 * kd[2];
        }
    const double n = static_cast<double>(lum.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < lum.size(); ++i) {
        ma += lum[i];
        mb += f[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < lum.size(); ++i) {
        sab += (lum[i] - ma) * (f[i] - mb);
        saa += (lum[i] - ma) * (lum[i] - ma);
        sbb += (f[i] - mb) * (f[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace metappear::svbrdf

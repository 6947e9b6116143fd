// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "metappear/error.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/render/flash.hpp"
#include "metappear/svbrdf/maps.hpp"
#include "metappear/svbrdf/svbrdf.hpp"
#include "support.hpp"

using namespace metappear;
using namespace metappear::svbrdf;
using render::FlashConfig;
using render::Image;

namespace {

SvBrdfMaps uniform_maps(std::size_t r, double kd, double ks, double rough) {
    SvBrdfMaps m(r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                m.at(kDiffuse + c, x, y) = unsquash_albedo(kd);
                m.at(kSpecular + c, x, y) = ks <= 0.0 ? -60.0 : unsquash_albedo(ks);
            }
            m.at(kRoughness, x, y) = unsquash_roughness(rough);
        }
    return m;
}

SvBrdfMaps noisy_maps(std::size_t r, Rng& rng) {
    SvBrdfMaps m(r);
    for (std::size_t i = 0; i < m.raw.size(); ++i) m.raw[i] = uniform(rng, -1.0, 1.0);
    for (std::size_t i = kHeight * r * r; i < m.raw.size(); ++i) m.raw[i] *= 0.3;
    return m;
}

PixelList all_pixels(std::size_t r) {
    PixelList p(r * r);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<std::uint32_t>(i);
    return p;
}

}  // namespace

TEST_CASE("squashing keeps maps in their valid ranges") {
    for (double raw : {-1e3, -30.0, -1.0, 0.0, 2.5, 40.0, 1e3}) {
        const double a = squash_albedo(raw);
        const double r = squash_roughness(raw);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        CHECK(r >= kMinRoughness);
        CHECK(r <= 1.0);
    }
    CHECK(squash_albedo(unsquash_albedo(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(squash_roughness(unsquash_roughness(0.21)) == doctest::Approx(0.21).epsilon(1e-12));
}

TEST_CASE("map buffer validation") {
    CHECK_THROWS_AS(SvBrdfMaps(4, std::vector<double>(10)), Error);
    CHECK_THROWS_AS(SvBrdfMaps(0, std::vector<double>{}), Error);
    const SvBrdfMaps m(5);
    CHECK(m.raw.size() == 8 * 25);
    CHECK(SvBrdfMaps::from_params(m.params()) == m);
    CHECK_THROWS_AS(SvBrdfMaps::from_params(diff::ParamVector(diff::Architecture::vector(3))), Error);
}

TEST_CASE("normals: constant height is flat, a ramp tilts uniformly") {
    const std::size_t r = 6;
    std::vector<double> flat(r * r, 3.5);
    for (const Vec3& n : maps_to_normals(flat, r)) {
        CHECK(n.x == 0.0);
        CHECK(n.y == 0.0);
        CHECK(n.z == 1.0);
    }
    std::vector<double> ramp(r * r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) ramp[y * r + x] = static_cast<double>(x);
    const double s = 1.0 / std::sqrt(2.0);
    for (const Vec3& n : maps_to_normals(ramp, r)) {
        CHECK(n.x == doctest::Approx(-s).epsilon(1e-15));
        CHECK(n.y == doctest::Approx(0.0));
        CHECK(n.z == doctest::Approx(s).epsilon(1e-15));
    }
}

TEST_CASE("normals match a finite-difference oracle and have unit length") {
    const std::size_t r = 9;
    Rng rng(4);
    std::vector<double> h(r * r);
    for (auto& v : h) v = uniform(rng, -2.0, 2.0);
    const auto normals = maps_to_normals(h, r);
    auto height = [&](long x, long y) { return h[static_cast<std::size_t>(y) * r + static_cast<std::size_t>(x)]; };
    const long last = static_cast<long>(r) - 1;
    for (long y = 0; y <= last; ++y)
        for (long x = 0; x <= last; ++x) {
            const long x0 = std::max(0L, x - 1), x1 = std::min(last, x + 1);
            const long y0 = std::max(0L, y - 1), y1 = std::min(last, y + 1);
            const double dx = (height(x1, y) - height(x0, y)) / static_cast<double>(x1 - x0);
            const double dy = (height(x, y1) - height(x, y0)) / static_cast<double>(y1 - y0);
            const double len = std::sqrt(dx * dx + dy * dy + 1.0);
            const Vec3& n = normals[static_cast<std::size_t>(y) * r + static_cast<std::size_t>(x)];
            CHECK(n.x == doctest::Approx(-dx / len).epsilon(1e-13));
            CHECK(n.y == doctest::Approx(-dy / len).epsilon(1e-13));
            CHECK(n.z == doctest::Approx(1.0 / len).epsilon(1e-13));
            CHECK(length(n) == doctest::Approx(1.0).epsilon(1e-14));
        }
}

TEST_CASE("flash render at nadir: diffuse albedo / pi * I / h^2") {
    FlashConfig cfg;
    cfg.light_height = 1.7;
    cfg.intensity = 2.5;
    const std::size_t r = 9;
    const Image img = render::render_flash(uniform_maps(r, 0.6, 0.0, 0.4), cfg);
    const double expected = 0.6 / std::numbers::pi * cfg.intensity / (cfg.light_height * cfg.light_height);
    for (std::size_t c = 0; c < 3; ++c) CHECK(img.at(4, 4, c) == doctest::Approx(expected).epsilon(1e-12));
    // Off-centre texels are dimmer.
    CHECK(img.at(0, 0, 0) < img.at(4, 4, 0));
    CHECK(img.at(0, 0, 0) > 0.0);
}

TEST_CASE("flash render is linear in intensity and valid for extreme maps") {
    Rng rng(12);
    SvBrdfMaps m = noisy_maps(12, rng);
    FlashConfig cfg;
    const Image a = render::render_flash(m, cfg);
    cfg.intensity *= 2.0;
    const Image b = render::render_flash(m, cfg);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(b.data[i] == doctest::Approx(2.0 * a.data[i]).epsilon(1e-14));

    for (auto& v : m.raw) v = uniform(rng, -50.0, 50.0);
    const Image wild = render::render_flash(m, cfg);
    CHECK_NOTHROW(render::validate(wild));
}

TEST_CASE("flash loss gradient matches finite differences for every channel") {
    const std::size_t r = 7;
    Rng rng(21);
    const SvBrdfMaps truth = noisy_maps(r, rng);
    const FlashConfig cfg;
    const Image target = render::render_flash(truth, cfg);
    const SvBrdfMaps m = noisy_maps(r, rng);
    const PixelList pixels = all_pixels(r);
    std::vector<double> grad(m.raw.size());
    svbrdf_loss_and_grad(m.raw, r, target, pixels, cfg, kHeightPrior, grad);
    auto f = [&](const std::vector<double>& x) { return svbrdf_loss_and_grad(x, r, target, pixels, cfg, kHeightPrior, {}); };
    std::size_t checked = 0;
    for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t y : {0u, 3u, 6u})
            for (std::size_t x : {0u, 2u, 6u}) {
                const std::size_t i = m.index(c, x, y);
                const double fd = testing::central_difference(f, m.raw, i, 1e-6);
                CHECK_MESSAGE(testing::close_rel(grad[i], fd, 1e-4, 1e-8), "channel ", c, " texel ", x, ",", y);
                ++checked;
            }
    CHECK(checked == 72);
}

TEST_CASE("flash loss gradient for a single roughness texel") {
    const std::size_t r = 5;
    const SvBrdfMaps truth = uniform_maps(r, 0.4, 0.3, 0.15);
    SvBrdfMaps m = truth;
    m.at(kRoughness, 2, 2) = unsquash_roughness(0.35);
    const FlashConfig cfg;
    const Image target = render::render_flash(truth, cfg);
    const PixelList pixels = all_pixels(r);
    std::vector<double> grad(m.raw.size());
    svbrdf_loss_and_grad(m.raw, r, target, pixels, cfg, 0.0, grad);
    auto f = [&](const std::vector<double>& x) { return svbrdf_loss_and_grad(x, r, target, pixels, cfg, 0.0, {}); };
    const std::size_t i = m.index(kRoughness, 2, 2);
    const double fd = testing::central_difference(f, m.raw, i, 1e-6);
    CHECK(std::abs(grad[i]) > 1e-3);
    CHECK(std::abs(grad[i] - fd) < 1e-4 * std::abs(fd));
}

TEST_CASE("flash loss Hessian-vector product matches finite differences of the gradient") {
    const std::size_t r = 6;
    Rng rng(31);
    const FlashConfig cfg;
    const Image target = render::render_flash(noisy_maps(r, rng), cfg);
    const SvBrdfMaps m = noisy_maps(r, rng);
    const PixelList pixels = all_pixels(r);
    const std::vector<double> v = testing::random_vector(m.raw.size(), rng, 1.0);
    std::vector<double> hv(m.raw.size());
    svbrdf_hessian_vector(m.raw, r, target, pixels, cfg, kHeightPrior, v, hv);
    const double h = 1e-6;
    std::vector<double> xp = m.raw, xm = m.raw, gp(m.raw.size()), gm(m.raw.size());
    for (std::size_t i = 0; i < xp.size(); ++i) {
        xp[i] += h * v[i];
        xm[i] -= h * v[i];
    }
    svbrdf_loss_and_grad(xp, r, target, pixels, cfg, kHeightPrior, gp);
    svbrdf_loss_and_grad(xm, r, target, pixels, cfg, kHeightPrior, gm);
    for (std::size_t i = 0; i < hv.size(); ++i)
        CHECK(testing::close_rel(hv[i], (gp[i] - gm[i]) / (2.0 * h), 1e-4, 1e-6));
}

TEST_CASE("svbrdf_loss: generating maps leave only the prior term") {
    const std::size_t r = 8;
    Rng rng(41);
    const SvBrdfMaps truth = noisy_maps(r, rng);
    const FlashConfig cfg;
    const Image target = render::render_flash(truth, cfg);
    const PixelList pixels = all_pixels(r);
    CHECK(svbrdf_loss(truth, target, pixels, cfg, 0.0) < 1e-12);

    double prior = 0.0;
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            if (x + 1 < r) prior += std::pow(truth.height(x + 1, y) - truth.height(x, y), 2);
            if (y + 1 < r) prior += std::pow(truth.height(x, y + 1) - truth.height(x, y), 2);
        }
    CHECK(svbrdf_loss(truth, target, pixels, cfg, 0.01) == doctest::Approx(0.01 * prior).epsilon(1e-10));
    CHECK(svbrdf_loss(noisy_maps(r, rng), target, pixels, cfg, 0.0) > 0.0);
}

TEST_CASE("svbrdf_loss rejects bad inputs") {
    const FlashConfig cfg;
    const SvBrdfMaps m(4);
    const Image target = render::render_flash(m, cfg);
    CHECK_THROWS_AS(svbrdf_loss(m, Image(5, 5), all_pixels(4), cfg), Error);
    CHECK_THROWS_AS(svbrdf_loss(m, target, PixelList{16}, cfg), Error);
    FlashConfig bad;
    bad.light_height = 0.0;
    CHECK_THROWS_AS(render::render_flash(m, bad), Error);
}

TEST_CASE("pixel split: disjoint, complete, about 20 percent held out") {
    const PixelSplit s = split_pixels(64, 99);
    std::set<std::uint32_t> seen(s.adaptation.begin(), s.adaptation.end());
    for (auto p : s.heldout) CHECK(seen.insert(p).second);
    CHECK(seen.size() == 64 * 64);
    const double frac = static_cast<double>(s.heldout.size()) / 4096.0;
    CHECK(frac > 0.17);
    CHECK(frac < 0.23);
    const PixelSplit again = split_pixels(64, 99);
    CHECK(again.heldout == s.heldout);
    const PixelSplit tiny = split_pixels(2, 5, 0.01);
    CHECK(!tiny.heldout.empty());
    CHECK(!tiny.adaptation.empty());
    CHECK_THROWS_AS(split_pixels(4, 1, 1.0), Error);
}

TEST_CASE("synthetic flash tasks: reproducible, finite, re-render bit-exact") {
    SyntheticFlashConfig cfg;
    cfg.resolution = 16;
    const auto a = make_synthetic_flash_tasks(3, 17, cfg);
    const auto b = make_synthetic_flash_tasks(3, 17, cfg);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].target() == b[i].target());
        CHECK(a[i].split().heldout == b[i].split().heldout);
        REQUIRE(a[i].truth().has_value());
        CHECK_NOTHROW(render::validate(a[i].target()));
        CHECK(render::render_flash(*a[i].truth(), a[i].config()) == a[i].target());
        CHECK(heldout_photometric_error(*a[i].truth(), a[i]) == 0.0);
        CHECK(a[i].param_count() == 8 * 16 * 16);
    }
    CHECK(a[0].target() != a[1].target());
    CHECK_THROWS_AS(make_synthetic_flash_tasks(0, 1, cfg), Error);
}

TEST_CASE("flash task batches cover their subsets") {
    SyntheticFlashConfig cfg;
    cfg.resolution = 12;
    const auto tasks = make_synthetic_flash_tasks(1, 3, cfg);
    Rng rng(0);
    CHECK(tasks[0].adaptation_batch(0, rng)->sample_count() == tasks[0].split().adaptation.size());
    CHECK(tasks[0].heldout_batch(rng)->sample_count() == tasks[0].split().heldout.size());
    // Held-out texels do not influence the adaptation loss except through
    // the height stencil and prior.
    const auto batch = tasks[0].adaptation_batch(0, rng);
    std::vector<double> grad(tasks[0].param_count());
    batch->loss_and_grad(neutral_maps(12).raw, grad);
    for (auto p : tasks[0].split().heldout)
        for (std::size_t c = 0; c < kHeight; ++c) CHECK(grad[c * 144 + p] == 0.0);
}

TEST_CASE("meta_fit_svbrdf with zero step sizes returns the initialization") {
    SyntheticFlashConfig cfg;
    cfg.resolution = 10;
    const auto tasks = make_synthetic_flash_tasks(1, 8, cfg);
    const SvBrdfMaps init = neutral_maps(10);
    const diff::MetaParams meta = diff::MetaParams::with_constant_step(init.params(), 0.0);
    Rng rng(1);
    const SvBrdfFit fit = meta_fit_svbrdf(meta, tasks[0], 20, rng);
    CHECK(fit.maps == init);
    CHECK(fit.render == render::render_flash(init, tasks[0].config()));
}

TEST_CASE("per-group step sizes and channel tying") {
    const SvBrdfMaps init = neutral_maps(4);
    StepInit steps;
    steps.diffuse = 1.0;
    steps.specular = 2.0;
    steps.roughness = 3.0;
    steps.height = 4.0;
    const diff::MetaParams m = initial_svbrdf_meta(init, steps);
    CHECK(m.step_sizes[0] == 1.0);
    CHECK(m.step_sizes[3 * 16] == 2.0);
    CHECK(m.step_sizes[6 * 16 + 5] == 3.0);
    CHECK(m.step_sizes[7 * 16 + 15] == 4.0);

    const meta::ParamTying t = channel_tying(4);
    CHECK(t.groups == 8);
    std::vector<double> v(8 * 16);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    t.project(v);
    CHECK(v[0] == 7.5);
    CHECK(v[15] == 7.5);
    CHECK(v[16] == 23.5);
}

TEST_CASE("tied meta-training keeps the initialization stationary") {
    SyntheticFlashConfig cfg;
    cfg.resolution = 8;
    const auto flash = make_synthetic_flash_tasks(4, 5, cfg);
    meta::TaskList tasks;
    for (const auto& t : flash) tasks.push_back(std::make_shared<FlashTask>(t));
    meta::MetaConfig mc = meta::MetaConfig::svbrdf_defaults();
    mc.epochs = 5;
    mc.k = 3;
    mc.threads = 1;
    const auto result = meta::meta_train(tasks, initial_svbrdf_meta(neutral_maps(8)), mc, {}, channel_tying(8));
    const auto theta = result.meta.init.values();
    for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t p = 1; p < 64; ++p) CHECK(theta[c * 64 + p] == theta[c * 64]);
    CHECK(theta[0] != neutral_maps(8).raw[0]);
}

TEST_CASE("diffuse/falloff correlation") {
    const std::size_t r = 16;
    const FlashConfig cfg;
    CHECK(std::abs(diffuse_falloff_correlation(neutral_maps(r), cfg)) < 1e-12);
    const auto f = render::flash_falloff(r, cfg);
    SvBrdfMaps baked = neutral_maps(r);
    for (std::size_t i = 0; i < r * r; ++i)
        for (std::size_t c = 0; c < 3; ++c) baked.raw[c * r * r + i] = unsquash_albedo(0.8 * f[i]);
    CHECK(diffuse_falloff_correlation(baked, cfg) == doctest::Approx(1.0).epsilon(1e-9));
}

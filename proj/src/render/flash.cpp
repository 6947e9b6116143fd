// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/render/flash.hpp"

#include <cmath>

#include "metappear/error.hpp"

namespace metappear::render {

void FlashConfig::validate() const {
    if (!(light_height > 0.0) || !std::isfinite(light_height)) throw invalid_argument("light height must be positive");
    if (!(extent > 0.0) || !std::isfinite(extent)) throw invalid_argument("sample extent must be positive");
    if (!(intensity > 0.0) || !std::isfinite(intensity)) throw invalid_argument("light intensity must be positive");
}

Vec3 flash_light_offset(std::size_t x, std::size_t y, std::size_t r, const FlashConfig& cfg) {
    const double px = (static_cast<double>(x) + 0.5) / static_cast<double>(r) * cfg.extent - 0.5 * cfg.extent;
    const double py = (static_cast<double>(y) + 0.5) / static_cast<double>(r) * cfg.extent - 0.5 * cfg.extent;
    return {-px, -py, cfg.light_height};
}

Image render_flash(const svbrdf::SvBrdfMaps& maps, const FlashConfig& cfg) {
    cfg.validate();
    const std::size_t r = maps.resolution;
    if (maps.raw.size() != svbrdf::kChannels * r * r) throw invalid_argument("map buffer has the wrong size");
    if (!diff::all_finite(maps.raw)) throw numerical_error("parameter maps contain non-finite values");
    const std::size_t np = maps.pixel_count();
    const std::span<const double> height(maps.raw.data() + svbrdf::kHeight * np, np);
    Image img(r, r);
    double local[7];
    double rgb[3];
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t c = 0; c < 7; ++c) local[c] = maps.at(c, x, y);
            const svbrdf::HeightStencil s = svbrdf::height_stencil(x, y, r);
            const double dx = s.weight[0] * (height[s.idx[0][1]] - height[s.idx[0][0]]);
            const double dy = s.weight[1] * (height[s.idx[1][1]] - height[s.idx[1][0]]);
            shade_flash_texel<double>(local, dx, dy, flash_light_offset(x, y, r, cfg), cfg.intensity, rgb);
            img.set(x, y, {rgb[0], rgb[1], rgb[2]});
        }
    return img;
}

std::vector<double> flash_falloff(std::size_t r, const FlashConfig& cfg) {
    cfg.validate();
    std::vector<double> f(r * r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            const Vec3 o = flash_light_offset(x, y, r, cfg);
            const double d2 = dot(o, o);
            f[y * r + x] = o.z / std::sqrt(d2) / d2;
        }
    return f;
}

}  // namespace metappear::render

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "metappear/data/shading.hpp"
#include "metappear/render/image.hpp"
#include "metappear/svbrdf/maps.hpp"

namespace metappear::render {

/// Flat sample of side `extent` centred at the origin in the z = 0 plane,
/// seen by a camera with a point light at (0, 0, light_height).
struct FlashConfig {
    double light_height = 1.0;
    double extent = 2.0;
    double intensity = 3.141592653589793;

    void validate() const;
};

/// World-space offset from the pixel centre to the light, for pixel (x, y)
/// of an R x R map.
Vec3 flash_light_offset(std::size_t x, std::size_t y, std::size_t resolution, const FlashConfig& cfg);

/// Radiance toward the collocated camera of one texel. `raw` holds the 7
/// unconstrained material values (diffuse RGB, specular RGB, roughness) and
/// (dx, dy) the height slopes. `to_light` is the unnormalized offset from
/// the texel to the light.
template <class T>
void shade_flash_texel(const T* raw, const T& dx, const T& dy, const Vec3& to_light, double intensity,
                       T out[3]) {
    using std::sqrt;
    const double d2 = dot(to_light, to_light);
    const Vec3 l = to_light * (1.0 / std::sqrt(d2));
    T inv_len = T(1.0) / sqrt(dx * dx + dy * dy + 1.0);
    // n = (-dx, -dy, 1) / |.|
    T c = (l.z - dx * l.x - dy * l.y) * inv_len;
    if (diff::primal(c) <= 0.0) {
        for (int k = 0; k < 3; ++k) out[k] = T(0.0);
        return;
    }
    T alpha = svbrdf::squash_roughness(raw[svbrdf::kRoughness]);
    T g1 = shading::smith_g1(c, alpha);
    // omega_i = omega_o, so the half vector is the light direction.
    T lobe = shading::ggx_distribution(c, alpha) * g1 * g1 / (4.0 * shading::clamp_cos(c));
    T irradiance = c * (intensity / d2);
    for (int k = 0; k < 3; ++k) {
        T kd = svbrdf::squash_albedo(raw[svbrdf::kDiffuse + k]);
        T ks = svbrdf::squash_albedo(raw[svbrdf::kSpecular + k]);
        out[k] = kd * irradiance * (1.0 / 3.141592653589793) + ks * lobe * (intensity / d2);
    }
}

/// Cook-Torrance render of the maps under the collocated flash, with
/// inverse-square falloff. Image pixel (x, y) shows texel (x, y).
Image render_flash(const svbrdf::SvBrdfMaps& maps, const FlashConfig& cfg);

/// cos(theta) / d^2 of a flat unit-normal plane: the shading pattern a
/// diffuse map would need to absorb to fake the flash.
std::vector<double> flash_falloff(std::size_t resolution, const FlashConfig& cfg);

}  // namespace metappear::render

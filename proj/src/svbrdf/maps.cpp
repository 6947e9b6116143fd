// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/svbrdf/maps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metappear/error.hpp"

namespace metappear::svbrdf {

double unsquash_albedo(double value) {
    const double v = std::clamp(value, 1e-9, 1.0 - 1e-9);
    return std::log(v / (1.0 - v));
}

double unsquash_roughness(double value) {
    return unsquash_albedo((value - kMinRoughness) / (1.0 - kMinRoughness));
}

SvBrdfMaps::SvBrdfMaps(std::size_t r, std::vector<double> values) : resolution(r), raw(std::move(values)) {
    if (r == 0) throw invalid_argument("map resolution must be positive");
    if (raw.size() != kChannels * r * r)
        throw invalid_argument("map buffer holds " + std::to_string(raw.size()) + " values, expected " +
                               std::to_string(kChannels * r * r));
}

Rgb SvBrdfMaps::diffuse(std::size_t x, std::size_t y) const {
    return {squash_albedo(at(kDiffuse, x, y)), squash_albedo(at(kDiffuse + 1, x, y)),
            squash_albedo(at(kDiffuse + 2, x, y))};
}

Rgb SvBrdfMaps::specular(std::size_t x, std::size_t y) const {
    return {squash_albedo(at(kSpecular, x, y)), squash_albedo(at(kSpecular + 1, x, y)),
            squash_albedo(at(kSpecular + 2, x, y))};
}

double SvBrdfMaps::roughness(std::size_t x, std::size_t y) const { return squash_roughness(at(kRoughness, x, y)); }

SvBrdfMaps SvBrdfMaps::from_params(const diff::ParamVector& p) {
    const auto& a = p.arch();
    if (a.kind != diff::ArchKind::PixelGrid || a.dims[0] != kChannels || a.dims[1] != a.dims[2])
        throw invalid_argument("not an svBRDF map grid: " + a.describe());
    return SvBrdfMaps(a.dims[1], p.raw());
}

HeightStencil height_stencil(std::size_t x, std::size_t y, std::size_t r) {
    HeightStencil s{};
    const std::size_t pos[2] = {x, y};
    for (std::size_t axis = 0; axis < 2; ++axis) {
        const std::size_t p = pos[axis];
        std::size_t lo = p, hi = p;
        double w = 1.0;
        if (r > 1) {
            if (p == 0) {
                hi = 1;
            } else if (p + 1 == r) {
                lo = p - 1;
            } else {
                lo = p - 1;
                hi = p + 1;
                w = 0.5;
            }
        } else {
            w = 0.0;
        }
        s.idx[axis][0] = axis == 0 ? y * r + lo : lo * r + x;
        s.idx[axis][1] = axis == 0 ? y * r + hi : hi * r + x;
        s.weight[axis] = w;
    }
    return s;
}

std::vector<Vec3> maps_to_normals(std::span<const double> height, std::size_t r) {
    if (height.size() != r * r) throw invalid_argument("height map has the wrong size");
    std::vector<Vec3> n(r * r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            const HeightStencil s = height_stencil(x, y, r);
            const double dx = s.weight[0] * (height[s.idx[0][1]] - height[s.idx[0][0]]);
            const double dy = s.weight[1] * (height[s.idx[1][1]] - height[s.idx[1][0]]);
            n[y * r + x] = normalize(Vec3{-dx, -dy, 1.0});
        }
    return n;
}

std::vector<Vec3> maps_to_normals(const SvBrdfMaps& maps) {
    const std::size_t p = maps.pixel_count();
    return maps_to_normals(std::span<const double>(maps.raw).subspan(kHeight * p, p), maps.resolution);
}

}  // namespace metappear::svbrdf

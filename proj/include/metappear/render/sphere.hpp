// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "metappear/data/rusin.hpp"
#include "metappear/diff/param_vector.hpp"
#include "metappear/render/image.hpp"

namespace metappear::render {

struct RenderConfig {
    std::size_t resolution = 128;
    Vec3 light_dir{0.0, 0.0, 1.0};  // toward the light
    double intensity = 3.141592653589793;
    Vec3 view_dir{0.0, 0.0, 1.0};  // toward the viewer; the image is always an orthographic projection along z
    double exposure = 1.0;
    double gamma = 2.2;

    void validate() const;
};

/// Reflectance for a batch of local-frame direction pairs.
using BrdfBatchFn = std::function<std::vector<Rgb>(std::span<const data::DirectionPair>)>;

BrdfBatchFn pointwise(std::function<Rgb(const Vec3& wi, const Vec3& wo)> f);
BrdfBatchFn nbrdf_brdf(const diff::ParamVector& params);

/// Unit sphere filling the frame. Each on-sphere pixel receives
/// f(wi, wo) * cos(theta_i) * intensity in the local frame of its normal;
/// pixels off the sphere or facing away from light or viewer are 0.
Image render_sphere(const BrdfBatchFn& brdf, const RenderConfig& cfg);

/// Surface normal under pixel (x, y); false off the sphere.
bool sphere_normal(std::size_t x, std::size_t y, std::size_t resolution, Vec3& n);

}  // namespace metappear::render

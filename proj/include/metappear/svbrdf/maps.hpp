// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metappear/diff/dual.hpp"
#include "metappear/diff/param_vector.hpp"
#include "metappear/vec3.hpp"

namespace metappear::svbrdf {

inline constexpr std::size_t kChannels = 8;
inline constexpr std::size_t kDiffuse = 0;    // 3 channels
inline constexpr std::size_t kSpecular = 3;   // 3 channels
inline constexpr std::size_t kRoughness = 6;
inline constexpr std::size_t kHeight = 7;
inline constexpr std::size_t kDefaultResolution = 64;
inline constexpr double kMinRoughness = 0.02;

template <class T>
T squash_albedo(const T& raw) {
    return diff::sigmoid(raw);
}

template <class T>
T squash_roughness(const T& raw) {
    return kMinRoughness + (1.0 - kMinRoughness) * diff::sigmoid(raw);
}

double unsquash_albedo(double value);
double unsquash_roughness(double value);

/// Parameter maps in the unconstrained basis, channel-major:
/// raw[c * R * R + y * R + x]. Albedos and roughness are squashed on use;
/// height is used as is, in units of the pixel pitch.
struct SvBrdfMaps {
    std::size_t resolution = 0;
    std::vector<double> raw;

    SvBrdfMaps() = default;
    explicit SvBrdfMaps(std::size_t r) : resolution(r), raw(kChannels * r * r, 0.0) {}
    SvBrdfMaps(std::size_t r, std::vector<double> values);

    std::size_t pixel_count() const { return resolution * resolution; }
    std::size_t index(std::size_t channel, std::size_t x, std::size_t y) const {
        return channel * pixel_count() + y * resolution + x;
    }
    double& at(std::size_t channel, std::size_t x, std::size_t y) { return raw[index(channel, x, y)]; }
    double at(std::size_t channel, std::size_t x, std::size_t y) const { return raw[index(channel, x, y)]; }

    Rgb diffuse(std::size_t x, std::size_t y) const;
    Rgb specular(std::size_t x, std::size_t y) const;
    double roughness(std::size_t x, std::size_t y) const;
    double height(std::size_t x, std::size_t y) const { return at(kHeight, x, y); }

    diff::Architecture arch() const { return diff::Architecture::pixel_grid(kChannels, resolution, resolution); }
    diff::ParamVector params() const { return diff::ParamVector(arch(), raw); }
    static SvBrdfMaps from_params(const diff::ParamVector& p);
    bool operator==(const SvBrdfMaps&) const = default;
};

/// Height gradient at (x, y): central differences inside, one-sided at the
/// border. Writes the stencil as (index, weight) pairs for dx and dy.
struct HeightStencil {
    std::size_t idx[2][2];  // [axis][0 = minus side, 1 = plus side]
    double weight[2];       // derivative = weight * (h[plus] - h[minus])
};

HeightStencil height_stencil(std::size_t x, std::size_t y, std::size_t resolution);

/// normalize(-dh/dx, -dh/dy, 1) per pixel.
std::vector<Vec3> maps_to_normals(std::span<const double> height, std::size_t resolution);
std::vector<Vec3> maps_to_normals(const SvBrdfMaps& maps);

}  // namespace metappear::svbrdf

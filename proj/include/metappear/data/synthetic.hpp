// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metappear/vec3.hpp"

namespace metappear::data {

/// Procedural Cook-Torrance material standing in for a measured BRDF.
struct SyntheticBrdfSpec {
    std::string name;
    Rgb diffuse{0.5, 0.5, 0.5};   // [0, 1]^3
    Rgb specular{0.0, 0.0, 0.0};  // [0, 1]^3
    double roughness = 0.3;       // GGX alpha, [0.02, 1]
    std::uint64_t seed = 0;       // drives the angular train/test split

    void validate() const;
};

inline constexpr double kMinRoughness = 0.02;
inline constexpr double kMaxRoughness = 1.0;

/// f = (1 - m) kd / pi + D G F / (4 cos_i cos_o), m = max(ks), with the
/// Fresnel term F = ks + (m - ks)(1 - h.wi)^5 bounded by m so the directional
/// albedo stays below one. Zero specular gives a Lambertian. Directions in the
/// local frame; returns zero below the horizon.
Rgb eval_synthetic(const SyntheticBrdfSpec& spec, const Vec3& wi, const Vec3& wo);

/// n materials: uniform albedos, log-uniform roughness.
std::vector<SyntheticBrdfSpec> make_synthetic_family(std::size_t n, std::uint64_t seed);

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) into train (first 80%) and test.
TrainTestSplit split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.8);

}  // namespace metappear::data

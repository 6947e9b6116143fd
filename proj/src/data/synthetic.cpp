// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "metappear/data/shading.hpp"
#include "metappear/error.hpp"
#include "metappear/rng.hpp"

namespace metappear::data {

void SyntheticBrdfSpec::validate() const {
    for (std::size_t c = 0; c < 3; ++c) {
        if (!(diffuse[c] >= 0.0 && diffuse[c] <= 1.0))
            throw invalid_argument("diffuse albedo of '" + name + "' outside [0, 1]");
        if (!(specular[c] >= 0.0 && specular[c] <= 1.0))
            throw invalid_argument("specular albedo of '" + name + "' outside [0, 1]");
    }
    if (!(roughness >= kMinRoughness && roughness <= kMaxRoughness))
        throw invalid_argument("roughness of '" + name + "' outside [0.02, 1]");
}

Rgb eval_synthetic(const SyntheticBrdfSpec& spec, const Vec3& wi, const Vec3& wo) {
    if (wi.z <= 0.0 || wo.z <= 0.0) return {0.0, 0.0, 0.0};
    const double m = std::max({spec.specular[0], spec.specular[1], spec.specular[2]});
    Rgb f{};
    const double diffuse_weight = (1.0 - m) / std::numbers::pi;
    for (std::size_t c = 0; c < 3; ++c) f[c] = diffuse_weight * spec.diffuse[c];
    if (m <= 0.0) return f;

    const Vec3 h = normalize(wi + wo);
    const double lobe = shading::microfacet_lobe(h.z, wi.z, wo.z, spec.roughness);
    const double t = 1.0 - std::clamp(dot(h, wi), 0.0, 1.0);
    const double t5 = t * t * t * t * t;
    for (std::size_t c = 0; c < 3; ++c) {
        const double fresnel = spec.specular[c] + (m - spec.specular[c]) * t5;
        f[c] += lobe * fresnel;
    }
    return f;
}

std::vector<SyntheticBrdfSpec> make_synthetic_family(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw invalid_argument("synthetic family size must be positive");
    Rng rng(seed);
    std::vector<SyntheticBrdfSpec> out;
    out.reserve(n);
    const double log_lo = std::log(kMinRoughness), log_hi = std::log(kMaxRoughness);
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticBrdfSpec s;
        char name[32];
        std::snprintf(name, sizeof(name), "synthetic_%03zu", i);
        s.name = name;
        for (auto& d : s.diffuse) d = uniform01(rng);
        for (auto& k : s.specular) k = uniform01(rng);
        s.roughness = std::clamp(std::exp(uniform(rng, log_lo, log_hi)), kMinRoughness, kMaxRoughness);
        s.seed = derive_seed({seed, i});
        out.push_back(s);
    }
    return out;
}

TrainTestSplit split_indices(std::size_t n, std::uint64_t seed, double train_fraction) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed({seed, 0x5eed}));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    TrainTestSplit s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

}  // namespace metappear::data

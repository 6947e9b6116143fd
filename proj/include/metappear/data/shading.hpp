// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <numbers>

#include "metappear/diff/dual.hpp"

// Cook-Torrance building blocks (GGX distribution, separable Smith masking,
// Schlick Fresnel), generic over the scalar type so the flash renderer can
// differentiate through them. `alpha` is the GGX roughness.

namespace metappear::shading {

/// Lower bound on cosines that appear in denominators.
inline constexpr double kCosClamp = 1e-4;

template <class T>
T clamp_cos(const T& c) {
    return diff::primal(c) < kCosClamp ? T(kCosClamp) : c;
}

template <class T>
T ggx_distribution(const T& n_dot_h, const T& alpha) {
    T a2 = alpha * alpha;
    T c2 = n_dot_h * n_dot_h;
    T denom = c2 * (a2 - 1.0) + 1.0;
    return a2 / (std::numbers::pi * denom * denom);
}

template <class T>
T smith_g1(const T& n_dot_v, const T& alpha) {
    using std::sqrt;
    T c = clamp_cos(n_dot_v);
    T a2 = alpha * alpha;
    return 2.0 * c / (c + sqrt(a2 + (1.0 - a2) * c * c));
}

template <class T, class F0>
T schlick_fresnel(const F0& f0, const T& v_dot_h) {
    T m = 1.0 - v_dot_h;
    T m2 = m * m;
    return f0 + (1.0 - f0) * (m2 * m2 * m);
}

/// D * G / (4 cos_i cos_o) without the Fresnel factor.
template <class T>
T microfacet_lobe(const T& n_dot_h, const T& cos_i, const T& cos_o, const T& alpha) {
    T d = ggx_distribution(n_dot_h, alpha);
    T g = smith_g1(cos_i, alpha) * smith_g1(cos_o, alpha);
    return d * g / (4.0 * clamp_cos(cos_i) * clamp_cos(cos_o));
}

}  // namespace metappear::shading

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "metappear/vec3.hpp"

namespace metappear::data {

/// Half/difference angle coordinates of an isotropic BRDF query, radians.
/// theta_h, theta_d in [0, pi/2]; phi_d in [0, pi).
struct RusinCoord {
    double theta_h = 0.0;
    double theta_d = 0.0;
    double phi_d = 0.0;
};

/// Directions in the local shading frame (normal = +z).
struct DirectionPair {
    Vec3 wi;
    Vec3 wo;
};

/// Inverse parametrization with the half-vector azimuth fixed to 0.
DirectionPair rusin_to_dirs(const RusinCoord& c);

/// Forward parametrization. Both inputs must be unit and in the upper
/// hemisphere. phi_d is folded into [0, pi) using reciprocity; the half-vector
/// azimuth is dropped (0 at the pole theta_h = 0).
RusinCoord dirs_to_rusin(const Vec3& wi, const Vec3& wo);

/// Cartesian half vector (azimuth 0) followed by the difference vector: the
/// 6-wide network input.
std::array<double, 6> half_diff_vectors(const RusinCoord& c);

}  // namespace metappear::data

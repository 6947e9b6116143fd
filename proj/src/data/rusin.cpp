// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/data/rusin.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "metappear/error.hpp"

namespace metappear::data {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = kPi / 2.0;

Vec3 rotate_z(const Vec3& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

Vec3 rotate_y(const Vec3& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
}

double polar(const Vec3& v) { return std::atan2(std::hypot(v.x, v.y), v.z); }

void check_unit_upper(const Vec3& v, const char* which) {
    if (std::abs(length(v) - 1.0) > 1e-6)
        throw invalid_argument(std::string(which) + " is not a unit vector");
    if (v.z < 0.0) throw invalid_argument(std::string(which) + " lies in the lower hemisphere");
}

}  // namespace

DirectionPair rusin_to_dirs(const RusinCoord& c) {
    if (!(c.theta_h >= 0.0 && c.theta_h <= kHalfPi) || !(c.theta_d >= 0.0 && c.theta_d <= kHalfPi) ||
        !(c.phi_d >= 0.0 && c.phi_d < kPi))
        throw invalid_argument("half/diff coordinates out of range: (" + std::to_string(c.theta_h) + ", " +
                               std::to_string(c.theta_d) + ", " + std::to_string(c.phi_d) + ")");
    const double st = std::sin(c.theta_d);
    const Vec3 d{st * std::cos(c.phi_d), st * std::sin(c.phi_d), std::cos(c.theta_d)};
    const Vec3 wi = rotate_y(d, c.theta_h);
    const Vec3 h{std::sin(c.theta_h), 0.0, std::cos(c.theta_h)};
    const Vec3 wo = 2.0 * dot(wi, h) * h - wi;
    return {normalize(wi), normalize(wo)};
}

RusinCoord dirs_to_rusin(const Vec3& wi, const Vec3& wo) {
    check_unit_upper(wi, "incoming direction");
    check_unit_upper(wo, "outgoing direction");
    Vec3 h = wi + wo;
    const double hl = length(h);
    if (hl < 1e-12) throw invalid_argument("incoming and outgoing directions are opposite");
    h = h * (1.0 / hl);
    RusinCoord c;
    c.theta_h = polar(h);
    const double phi_h = (h.x == 0.0 && h.y == 0.0) ? 0.0 : std::atan2(h.y, h.x);
    const Vec3 d = rotate_y(rotate_z(wi, -phi_h), -c.theta_h);
    c.theta_d = polar(d);
    double phi = (d.x == 0.0 && d.y == 0.0) ? 0.0 : std::atan2(d.y, d.x);
    if (phi < 0.0) phi += kPi;
    if (phi >= kPi) phi -= kPi;
    c.phi_d = phi;
    return c;
}

std::array<double, 6> half_diff_vectors(const RusinCoord& c) {
    const double st = std::sin(c.theta_d);
    return {std::sin(c.theta_h), 0.0, std::cos(c.theta_h),
            st * std::cos(c.phi_d), st * std::sin(c.phi_d), std::cos(c.theta_d)};
}

}  // namespace metappear::data

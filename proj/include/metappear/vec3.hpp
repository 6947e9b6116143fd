// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

namespace metappear {

template <class T>
struct Vec3T {
    T x{}, y{}, z{};

    friend Vec3T operator+(const Vec3T& a, const Vec3T& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3T operator-(const Vec3T& a, const Vec3T& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3T operator*(const Vec3T& a, const T& s) { return {a.x * s, a.y * s, a.z * s}; }
    friend Vec3T operator*(const T& s, const Vec3T& a) { return a * s; }
    friend Vec3T operator-(const Vec3T& a) { return {-a.x, -a.y, -a.z}; }
};

using Vec3 = Vec3T<double>;
using Rgb = std::array<double, 3>;

template <class T>
T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class T>
T length(const Vec3T<T>& a) {
    using std::sqrt;
    return sqrt(dot(a, a));
}

template <class T>
Vec3T<T> normalize(const Vec3T<T>& a) {
    T inv = T(1.0) / length(a);
    return {a.x * inv, a.y * inv, a.z * inv};
}

}  // namespace metappear

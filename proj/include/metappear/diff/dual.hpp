// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

// Forward-mode scalars used by the fixed-architecture derivative code.
//
// Dual<T>    : value + one tangent. Running a gradient routine on Dual<double>
//              with parameters seeded by a direction v yields H·v in the
//              tangent part of the gradient (forward-over-reverse).
// Jet<T, N>  : value + N tangents, used for small local Jacobians
//              (per-pixel shading in the flash renderer).
//
// Both nest: Jet<Dual<double>, N> gives local gradients whose entries carry
// Hessian-vector tangents.

namespace metappear::diff {

inline double primal(double x) { return x; }

template <class T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit constants
    Dual(T value, T tangent) : v(value), d(tangent) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

    friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
    friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        T inv = T(1.0) / b.v;
        T q = a.v * inv;
        return {q, (a.d - q * b.d) * inv};
    }
    friend Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
    friend Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
    friend Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
    friend Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
    friend Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
    friend Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
    friend Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

template <class T>
double primal(const Dual<T>& x) { return primal(x.v); }

template <class T>
Dual<T> exp(const Dual<T>& x) {
    using std::exp;
    T e = exp(x.v);
    return {e, e * x.d};
}

template <class T>
Dual<T> log(const Dual<T>& x) {
    using std::log;
    return {log(x.v), x.d / x.v};
}

template <class T>
Dual<T> log1p(const Dual<T>& x) {
    using std::log1p;
    return {log1p(x.v), x.d / (T(1.0) + x.v)};
}

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
    using std::sqrt;
    T s = sqrt(x.v);
    return {s, x.d / (T(2.0) * s)};
}

template <class T>
Dual<T> abs(const Dual<T>& x) {
    return primal(x.v) < 0.0 ? -x : x;
}

template <class T, std::size_t N>
struct Jet {
    T v{};
    std::array<T, N> g{};

    Jet() = default;
    Jet(double value) : v(value) {}  // NOLINT: implicit constants
    Jet(T value) requires(!std::is_same_v<T, double>) : v(value) {}  // NOLINT

    static Jet variable(T value, std::size_t slot) {
        Jet j(value);
        j.g[slot] = T(1.0);
        return j;
    }

    Jet& operator+=(const Jet& o) { *this = *this + o; return *this; }
    Jet& operator-=(const Jet& o) { *this = *this - o; return *this; }
    Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }

    friend Jet operator-(const Jet& a) {
        Jet r;
        r.v = -a.v;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = -a.g[i];
        return r;
    }
    friend Jet operator+(const Jet& a, const Jet& b) {
        Jet r;
        r.v = a.v + b.v;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] + b.g[i];
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        Jet r;
        r.v = a.v - b.v;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] - b.g[i];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        r.v = a.v * b.v;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) {
        Jet r;
        T inv = T(1.0) / b.v;
        r.v = a.v * inv;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
        return r;
    }
    friend Jet operator+(const Jet& a, double b) { Jet r = a; r.v = r.v + b; return r; }
    friend Jet operator+(double a, const Jet& b) { return b + a; }
    friend Jet operator-(const Jet& a, double b) { Jet r = a; r.v = r.v - b; return r; }
    friend Jet operator-(double a, const Jet& b) { return -(b - a); }
    friend Jet operator*(const Jet& a, double b) {
        Jet r;
        r.v = a.v * b;
        for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] * b;
        return r;
    }
    friend Jet operator*(double a, const Jet& b) { return b * a; }
    friend Jet operator/(const Jet& a, double b) { return a * (1.0 / b); }
    friend Jet operator/(double a, const Jet& b) { return Jet(a) / b; }

};

template <class T, std::size_t N>
double primal(const Jet<T, N>& x) { return primal(x.v); }

/// Chain rule for a unary function with value `f` and derivative `df` at x.v.
template <class T, std::size_t N>
Jet<T, N> apply_unary(const Jet<T, N>& x, const T& f, const T& df) {
    Jet<T, N> r;
    r.v = f;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = df * x.g[i];
    return r;
}

template <class T, std::size_t N>
Jet<T, N> exp(const Jet<T, N>& x) {
    using std::exp;
    T e = exp(x.v);
    return apply_unary(x, e, e);
}

template <class T, std::size_t N>
Jet<T, N> log(const Jet<T, N>& x) {
    using std::log;
    return apply_unary(x, log(x.v), T(1.0) / x.v);
}

template <class T, std::size_t N>
Jet<T, N> log1p(const Jet<T, N>& x) {
    using std::log1p;
    return apply_unary(x, log1p(x.v), T(1.0) / (T(1.0) + x.v));
}

template <class T, std::size_t N>
Jet<T, N> sqrt(const Jet<T, N>& x) {
    using std::sqrt;
    T s = sqrt(x.v);
    return apply_unary(x, s, T(0.5) / s);
}

template <class T, std::size_t N>
Jet<T, N> abs(const Jet<T, N>& x) {
    return primal(x.v) < 0.0 ? -x : x;
}

/// Numerically stable softplus log(1 + e^x), generic over scalar type.
template <class T>
T softplus(const T& x) {
    using std::exp;
    using std::log1p;
    if (primal(x) > 0.0) return x + log1p(exp(-x));
    return log1p(exp(x));
}

/// Logistic sigmoid, generic over scalar type.
template <class T>
T sigmoid(const T& x) {
    using std::exp;
    if (primal(x) >= 0.0) return 1.0 / (1.0 + exp(-x));
    T e = exp(x);
    return e / (1.0 + e);
}

}  // namespace metappear::diff

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metappear::diff {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Softplus = 2, Exp = 3 };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

enum class ArchKind : std::uint8_t {
    Mlp = 0,        // dims = layer widths, one activation per weight layer
    PixelGrid = 1,  // dims = {channels, height, width}
    Vector = 2,     // dims = {n}; free parameters of a hand-written objective
};

/// Architecture descriptor: enough to compute the parameter count and, for
/// MLPs, the parameter layout. MLP parameters are stored layer by layer as a
/// row-major weight matrix [out][in] followed by the bias [out].
struct Architecture {
    ArchKind kind = ArchKind::Vector;
    std::vector<std::size_t> dims;
    std::vector<Activation> activations;

    static Architecture mlp(std::vector<std::size_t> widths, std::vector<Activation> activations);
    static Architecture pixel_grid(std::size_t channels, std::size_t height, std::size_t width);
    static Architecture vector(std::size_t n);

    std::size_t param_count() const;
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t layer_count() const { return activations.size(); }

    /// Offset of layer `l`'s weight block inside the flat parameter array.
    std::size_t weight_offset(std::size_t l) const;
    std::size_t bias_offset(std::size_t l) const;

    /// Same architecture with every hidden Relu replaced by Softplus.
    Architecture smooth_twin() const;

    std::string describe() const;
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

/// Flat parameter array tagged with its architecture.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(Architecture arch);  // zero-initialized
    ParamVector(Architecture arch, std::vector<double> values);

    const Architecture& arch() const { return arch_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool all_finite() const;
    bool operator==(const ParamVector&) const = default;

private:
    Architecture arch_;
    std::vector<double> values_;
};

bool all_finite(std::span<const double> v);

}  // namespace metappear::diff

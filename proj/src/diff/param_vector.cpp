// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/diff/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metappear/error.hpp"

namespace metappear::diff {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Softplus: return "softplus";
        case Activation::Exp: return "exp";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "softplus") return Activation::Softplus;
    if (name == "exp") return Activation::Exp;
    throw invalid_argument("unknown activation '" + name + "'");
}

Architecture Architecture::mlp(std::vector<std::size_t> widths, std::vector<Activation> activations) {
    Architecture a;
    a.kind = ArchKind::Mlp;
    a.dims = std::move(widths);
    a.activations = std::move(activations);
    a.validate();
    return a;
}

Architecture Architecture::pixel_grid(std::size_t channels, std::size_t height, std::size_t width) {
    Architecture a;
    a.kind = ArchKind::PixelGrid;
    a.dims = {channels, height, width};
    a.validate();
    return a;
}

Architecture Architecture::vector(std::size_t n) {
    Architecture a;
    a.kind = ArchKind::Vector;
    a.dims = {n};
    a.validate();
    return a;
}

void Architecture::validate() const {
    switch (kind) {
        case ArchKind::Mlp:
            if (dims.size() < 2 || activations.size() != dims.size() - 1)
                throw invalid_argument("mlp architecture needs N widths and N-1 activations, got " +
                                       std::to_string(dims.size()) + " widths and " +
                                       std::to_string(activations.size()) + " activations");
            if (std::any_of(dims.begin(), dims.end(), [](std::size_t w) { return w == 0; }))
                throw invalid_argument("mlp layer width must be positive");
            break;
        case ArchKind::PixelGrid:
            if (dims.size() != 3 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
                throw invalid_argument("pixel grid needs positive {channels, height, width}");
            if (!activations.empty()) throw invalid_argument("pixel grid takes no activations");
            break;
        case ArchKind::Vector:
            if (dims.size() != 1) throw invalid_argument("vector architecture needs one dimension");
            if (!activations.empty()) throw invalid_argument("vector architecture takes no activations");
            break;
    }
}

std::size_t Architecture::param_count() const {
    switch (kind) {
        case ArchKind::Mlp: {
            std::size_t n = 0;
            for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
            return n;
        }
        case ArchKind::PixelGrid: return dims[0] * dims[1] * dims[2];
        case ArchKind::Vector: return dims[0];
    }
    return 0;
}

std::size_t Architecture::input_dim() const {
    if (kind != ArchKind::Mlp) throw invalid_argument("input_dim is only defined for mlp architectures");
    return dims.front();
}

std::size_t Architecture::output_dim() const {
    if (kind != ArchKind::Mlp) throw invalid_argument("output_dim is only defined for mlp architectures");
    return dims.back();
}

std::size_t Architecture::weight_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < l; ++i) off += dims[i] * dims[i + 1] + dims[i + 1];
    return off;
}

std::size_t Architecture::bias_offset(std::size_t l) const {
    return weight_offset(l) + dims[l] * dims[l + 1];
}

Architecture Architecture::smooth_twin() const {
    Architecture a = *this;
    for (auto& act : a.activations)
        if (act == Activation::Relu) act = Activation::Softplus;
    return a;
}

std::string Architecture::describe() const {
    std::ostringstream os;
    switch (kind) {
        case ArchKind::Mlp:
            os << "mlp[";
            for (std::size_t i = 0; i < dims.size(); ++i) {
                if (i) os << "-" << to_string(activations[i - 1]) << "-";
                os << dims[i];
            }
            os << "]";
            break;
        case ArchKind::PixelGrid:
            os << "grid[" << dims[0] << "x" << dims[1] << "x" << dims[2] << "]";
            break;
        case ArchKind::Vector:
            os << "vector[" << dims[0] << "]";
            break;
    }
    return os.str();
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ParamVector::ParamVector(Architecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    values_.assign(arch_.param_count(), 0.0);
}

ParamVector::ParamVector(Architecture arch, std::vector<double> values)
    : arch_(std::move(arch)), values_(std::move(values)) {
    arch_.validate();
    if (values_.size() != arch_.param_count())
        throw invalid_argument("parameter count mismatch for " + arch_.describe() + ": expected " +
                               std::to_string(arch_.param_count()) + ", got " +
                               std::to_string(values_.size()));
    if (!all_finite())
        throw numerical_error("parameter vector contains non-finite values");
}

bool ParamVector::all_finite() const { return diff::all_finite(values_); }

}  // namespace metappear::diff

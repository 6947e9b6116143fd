// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/param_vector.hpp"

namespace metappear::diff {

/// Row-major n x d matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

enum class LossKind {
    LogMaeCosine,  // |log(1 + y cos_i) - log(1 + t cos_i)|
    LogMae,        // |log(1 + y) - log(1 + t)|
    L1,            // |y - t|
};

/// Supervised samples for an MLP: inputs, targets and per-sample cosine
/// weights (only read by LogMaeCosine).
struct SampleSet {
    Matrix inputs;
    Matrix targets;
    std::vector<double> weights;

    std::size_t size() const { return inputs.rows; }
    void validate(const Architecture& arch, LossKind loss) const;
};

Matrix forward(const ParamVector& params, const Matrix& inputs);
Matrix forward(const Architecture& arch, std::span<const double> params, const Matrix& inputs);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean loss over samples and output channels plus its exact gradient.
/// Throws a Numerical error carrying the sample index if any sample's loss
/// is not finite.
LossGrad loss_and_grad(const ParamVector& params, const SampleSet& batch, LossKind loss);

double mlp_loss(const Architecture& arch, std::span<const double> params, const SampleSet& batch,
                LossKind loss);
double mlp_loss_and_grad(const Architecture& arch, std::span<const double> params,
                         const SampleSet& batch, LossKind loss, std::span<double> grad,
                         std::span<double> input_grad = {});
void mlp_hessian_vector(const Architecture& arch, std::span<const double> params,
                        const SampleSet& batch, LossKind loss, std::span<const double> v,
                        std::span<double> out);

class MlpBatch final : public Batch {
public:
    MlpBatch(Architecture arch, SampleSet samples, LossKind loss);

    std::size_t sample_count() const override { return samples_.size(); }
    double loss(std::span<const double> params) const override;
    double loss_and_grad(std::span<const double> params, std::span<double> grad) const override;
    void hessian_vector(std::span<const double> params, std::span<const double> v,
                        std::span<double> out) const override;

    const SampleSet& samples() const { return samples_; }
    const Architecture& arch() const { return arch_; }
    LossKind loss_kind() const { return loss_; }

private:
    Architecture arch_;
    SampleSet samples_;
    LossKind loss_;
};

}  // namespace metappear::diff

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "metappear/rng.hpp"

namespace metappear::diff {

/// One sampled set of observations together with a differentiable loss over
/// the model parameters. Batches are immutable once drawn so a Tape can hold
/// on to them and replay or differentiate the inner loop later.
class Batch {
public:
    virtual ~Batch() = default;

    virtual std::size_t sample_count() const = 0;
    virtual double loss(std::span<const double> params) const = 0;
    /// Writes d(loss)/d(params) into `grad` (overwritten) and returns the loss.
    virtual double loss_and_grad(std::span<const double> params, std::span<double> grad) const = 0;
    /// Writes H(params) * v into `out`, H the Hessian of the loss.
    virtual void hessian_vector(std::span<const double> params, std::span<const double> v,
                                std::span<double> out) const = 0;
};

using BatchPtr = std::shared_ptr<const Batch>;

/// One appearance problem instance: a source of adaptation batches and of
/// held-out batches drawn from samples disjoint from the adaptation ones.
class Task {
public:
    virtual ~Task() = default;

    virtual std::size_t param_count() const = 0;
    virtual BatchPtr adaptation_batch(std::size_t step, Rng& rng) const = 0;
    virtual BatchPtr heldout_batch(Rng& rng) const = 0;
    virtual std::string name() const { return "task"; }
};

/// Batch defined by callables; used for hand-written objectives.
class FunctionBatch final : public Batch {
public:
    using LossGradFn = std::function<double(std::span<const double>, std::span<double>)>;
    using HvpFn = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

    FunctionBatch(std::size_t samples, LossGradFn loss_grad, HvpFn hvp)
        : samples_(samples), loss_grad_(std::move(loss_grad)), hvp_(std::move(hvp)) {}

    std::size_t sample_count() const override { return samples_; }
    double loss(std::span<const double> params) const override;
    double loss_and_grad(std::span<const double> params, std::span<double> grad) const override {
        return loss_grad_(params, grad);
    }
    void hessian_vector(std::span<const double> params, std::span<const double> v,
                        std::span<double> out) const override {
        hvp_(params, v, out);
    }

private:
    std::size_t samples_;
    LossGradFn loss_grad_;
    HvpFn hvp_;
};

}  // namespace metappear::diff

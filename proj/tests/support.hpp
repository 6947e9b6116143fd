// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/mlp.hpp"
#include "metappear/diff/param_vector.hpp"
#include "metappear/rng.hpp"

namespace testing {

using namespace metappear;

// L(theta) = 0.5 * a * (theta - t)^2 on one parameter.
inline diff::BatchPtr quadratic_batch(double a, double t) {
    return std::make_shared<diff::FunctionBatch>(
        1,
        [a, t](std::span<const double> p, std::span<double> g) {
            g[0] = a * (p[0] - t);
            return 0.5 * a * (p[0] - t) * (p[0] - t);
        },
        [a](std::span<const double>, std::span<const double> v, std::span<double> out) { out[0] = a * v[0]; });
}

// Serves the same batch for adaptation and held-out evaluation.
class FixedTask final : public diff::Task {
public:
    FixedTask(std::size_t n, diff::BatchPtr adapt, diff::BatchPtr heldout)
        : n_(n), adapt_(std::move(adapt)), heldout_(std::move(heldout)) {}
    std::size_t param_count() const override { return n_; }
    diff::BatchPtr adaptation_batch(std::size_t, Rng&) const override { return adapt_; }
    diff::BatchPtr heldout_batch(Rng&) const override { return heldout_; }

private:
    std::size_t n_;
    diff::BatchPtr adapt_, heldout_;
};

// A different random batch per step, drawn from the task rng.
class RandomMlpTask final : public diff::Task {
public:
    RandomMlpTask(diff::Architecture arch, std::size_t batch, diff::LossKind loss)
        : arch_(std::move(arch)), batch_(batch), loss_(loss) {}
    std::size_t param_count() const override { return arch_.param_count(); }
    diff::BatchPtr adaptation_batch(std::size_t, Rng& rng) const override { return draw(rng); }
    diff::BatchPtr heldout_batch(Rng& rng) const override { return draw(rng); }

private:
    diff::BatchPtr draw(Rng& rng) const {
        diff::SampleSet s;
        s.inputs = diff::Matrix(batch_, arch_.input_dim());
        s.targets = diff::Matrix(batch_, arch_.output_dim());
        s.weights.resize(batch_);
        for (auto& x : s.inputs.data) x = uniform(rng, -1.0, 1.0);
        for (auto& x : s.targets.data) x = uniform(rng, 0.0, 0.3);
        for (auto& w : s.weights) w = uniform(rng, 0.1, 1.0);
        return std::make_shared<diff::MlpBatch>(arch_, std::move(s), loss_);
    }
    diff::Architecture arch_;
    std::size_t batch_;
    diff::LossKind loss_;
};

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(rng, -scale, scale);
    return v;
}

// Central difference of f along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

// Mixed tolerance: relative error with a tiny absolute floor for coordinates
// whose true derivative is at the round-off level.
inline bool close_rel(double a, double b, double rel, double abs_floor) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace testing

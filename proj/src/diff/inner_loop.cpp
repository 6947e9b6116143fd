// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/diff/inner_loop.hpp"

#include <cmath>
#include <string>

#include "metappear/error.hpp"

namespace metappear::diff {

const char* to_string(GradMode mode) {
    return mode == GradMode::Exact ? "exact" : "first-order";
}

GradMode grad_mode_from_string(const std::string& name) {
    if (name == "exact" || name == "maml") return GradMode::Exact;
    if (name == "first-order" || name == "fomaml") return GradMode::FirstOrder;
    throw invalid_argument("unknown gradient mode '" + name + "'");
}

MetaParams MetaParams::with_constant_step(ParamVector init, double step) {
    MetaParams m;
    m.step_sizes.assign(init.size(), step);
    m.init = std::move(init);
    return m;
}

void MetaParams::validate() const {
    if (step_sizes.size() != init.size())
        throw invalid_argument("step-size vector length " + std::to_string(step_sizes.size()) +
                               " does not match parameter count " + std::to_string(init.size()));
    if (!all_finite(init.values())) throw numerical_error("meta initialization is not finite");
    if (!all_finite(step_sizes)) throw numerical_error("meta step sizes are not finite");
}

namespace {

std::vector<double> resolve_scales(std::span<const double> scales, std::size_t k) {
    if (scales.empty()) return std::vector<double>(k, 1.0);
    if (scales.size() != k)
        throw invalid_argument("step scale count " + std::to_string(scales.size()) +
                               " does not match step count " + std::to_string(k));
    return {scales.begin(), scales.end()};
}

}  // namespace

InnerLoopResult inner_loop(const MetaParams& meta, const Task& task, std::size_t k, GradMode mode,
                           Rng& rng, std::span<const double> step_scales) {
    meta.validate();
    const std::size_t n = meta.size();
    if (task.param_count() != n)
        throw invalid_argument("task expects " + std::to_string(task.param_count()) +
                               " parameters, meta has " + std::to_string(n));

    InnerLoopResult r;
    Tape& tape = r.tape;
    tape.mode = mode;
    tape.steps = k;
    tape.step_scales = resolve_scales(step_scales, k);
    tape.batches.reserve(k);

    std::vector<double> theta(meta.init.values().begin(), meta.init.values().end());
    std::vector<double> grad(n);
    if (mode == GradMode::Exact) tape.trajectory.push_back(theta);

    for (std::size_t t = 0; t < k; ++t) {
        BatchPtr batch = task.adaptation_batch(t, rng);
        tape.samples_consumed += batch->sample_count();
        r.adaptation_losses.push_back(batch->loss_and_grad(theta, grad));
        const double scale = tape.step_scales[t];
        for (std::size_t i = 0; i < n; ++i) theta[i] -= scale * meta.step_sizes[i] * grad[i];
        if (!all_finite(grad) || !all_finite(theta))
            throw numerical_error("non-finite parameter update at inner step " + std::to_string(t), t);
        tape.batches.push_back(std::move(batch));
        if (mode == GradMode::Exact) {
            tape.trajectory.push_back(theta);
            tape.step_grads.push_back(grad);
        } else if (t + 1 == k) {
            tape.step_grads.push_back(grad);
        }
    }

    tape.heldout = task.heldout_batch(rng);
    r.heldout_grad.assign(n, 0.0);
    r.heldout_loss = tape.heldout->loss_and_grad(theta, r.heldout_grad);
    if (!std::isfinite(r.heldout_loss) || !all_finite(r.heldout_grad))
        throw numerical_error("non-finite held-out loss after " + std::to_string(k) + " steps", k);
    r.adapted = ParamVector(meta.init.arch(), std::move(theta));
    return r;
}

MetaGradient meta_gradient(const MetaParams& meta, const Tape& tape,
                           std::span<const double> heldout_grad, GradMode mode) {
    const std::size_t n = meta.size();
    if (heldout_grad.size() != n) throw invalid_argument("held-out gradient has wrong length");
    if (tape.mode != mode)
        throw invalid_argument(std::string("tape recorded in ") + to_string(tape.mode) +
                               " mode cannot be differentiated in " + to_string(mode) + " mode");

    MetaGradient mg;
    mg.init.assign(heldout_grad.begin(), heldout_grad.end());
    mg.step_sizes.assign(n, 0.0);
    if (tape.steps == 0) return mg;

    if (mode == GradMode::FirstOrder) {
        if (tape.step_grads.size() != 1) throw invalid_argument("first-order tape is missing its final gradient");
        const auto& g = tape.step_grads.back();
        const double scale = tape.step_scales.back();
        for (std::size_t i = 0; i < n; ++i) mg.step_sizes[i] = -scale * heldout_grad[i] * g[i];
        return mg;
    }

    if (tape.trajectory.size() != tape.steps + 1 || tape.step_grads.size() != tape.steps)
        throw invalid_argument("exact tape does not hold the full trajectory");

    // theta_{t+1} = theta_t - c_t S . g_t(theta_t)
    //   dL/dS       += -c_t a_{t+1} . g_t
    //   a_t          = a_{t+1} - c_t H_t (S . a_{t+1})
    std::vector<double>& adj = mg.init;
    std::vector<double> scaled(n), hv(n);
    for (std::size_t t = tape.steps; t-- > 0;) {
        const double c = tape.step_scales[t];
        const auto& g = tape.step_grads[t];
        for (std::size_t i = 0; i < n; ++i) {
            mg.step_sizes[i] -= c * adj[i] * g[i];
            scaled[i] = meta.step_sizes[i] * adj[i];
        }
        tape.batches[t]->hessian_vector(tape.trajectory[t], scaled, hv);
        for (std::size_t i = 0; i < n; ++i) adj[i] -= c * hv[i];
    }
    if (!all_finite(mg.init) || !all_finite(mg.step_sizes))
        throw numerical_error("non-finite meta-gradient");
    return mg;
}

std::vector<std::vector<double>> replay(const MetaParams& meta, const Tape& tape) {
    std::vector<std::vector<double>> traj;
    std::vector<double> theta(meta.init.values().begin(), meta.init.values().end());
    std::vector<double> grad(theta.size());
    traj.push_back(theta);
    for (std::size_t t = 0; t < tape.steps; ++t) {
        tape.batches[t]->loss_and_grad(theta, grad);
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] -= tape.step_scales[t] * meta.step_sizes[i] * grad[i];
        traj.push_back(theta);
    }
    return traj;
}

}  // namespace metappear::diff

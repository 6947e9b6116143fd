// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/param_vector.hpp"

namespace metappear::diff {

enum class GradMode { Exact, FirstOrder };

const char* to_string(GradMode mode);
GradMode grad_mode_from_string(const std::string& name);

/// Meta parameters: initialization plus one per-parameter step size shared by
/// all inner steps. Step sizes may be negative.
struct MetaParams {
    ParamVector init;
    std::vector<double> step_sizes;

    static MetaParams with_constant_step(ParamVector init, double step);
    std::size_t size() const { return init.size(); }
    void validate() const;
    bool operator==(const MetaParams&) const = default;
};

/// Everything needed to differentiate (Exact) or approximate (FirstOrder)
/// the unrolled inner loop after the fact.
struct Tape {
    GradMode mode = GradMode::Exact;
    std::size_t steps = 0;
    std::vector<BatchPtr> batches;                 // one per inner step
    BatchPtr heldout;
    std::vector<double> step_scales;               // multiplier on S per step
    std::vector<std::vector<double>> trajectory;   // theta_0 .. theta_k (Exact only)
    std::vector<std::vector<double>> step_grads;   // g_0 .. g_{k-1} (Exact) or g_{k-1} (FirstOrder)
    std::size_t samples_consumed = 0;
};

struct InnerLoopResult {
    ParamVector adapted;
    Tape tape;
    double heldout_loss = 0.0;
    std::vector<double> heldout_grad;
    std::vector<double> adaptation_losses;  // loss before each update
};

struct MetaGradient {
    std::vector<double> init;
    std::vector<double> step_sizes;
};

/// Runs k steps of theta -= (scale_t * S) . grad(loss_t)(theta) from theta_0,
/// then evaluates the held-out loss on a batch disjoint from the adaptation
/// batches. `step_scales` (length k, optional) defaults to all ones.
InnerLoopResult inner_loop(const MetaParams& meta, const Task& task, std::size_t k, GradMode mode,
                           Rng& rng, std::span<const double> step_scales = {});

/// Gradient of the held-out loss with respect to theta_0 and S.
/// Exact back-propagates through every update using Hessian-vector products;
/// FirstOrder drops the curvature terms and keeps only the final step's
/// contribution to S.
MetaGradient meta_gradient(const MetaParams& meta, const Tape& tape,
                           std::span<const double> heldout_grad, GradMode mode);

/// Recomputes the primal trajectory theta_0 .. theta_k from the recorded batches.
std::vector<std::vector<double>> replay(const MetaParams& meta, const Tape& tape);

}  // namespace metappear::diff

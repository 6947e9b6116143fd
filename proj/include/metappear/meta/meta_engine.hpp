// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "metappear/diff/batch.hpp"
#include "metappear/diff/inner_loop.hpp"

namespace metappear::meta {

using diff::GradMode;
using diff::MetaParams;
using TaskList = std::vector<std::shared_ptr<const diff::Task>>;

struct MetaConfig {
    std::size_t k = 10;
    std::size_t b = 1;
    GradMode mode = GradMode::Exact;
    double meta_lr = 1e-4;
    double weight_decay = 1e-6;
    bool cosine_annealing = false;
    bool anneal_inner = false;  // anneal the inner step sizes instead of the outer rate
    std::size_t epochs = 2000;
    double s_init = 1e-3;
    bool learn_step_sizes = true;  // false: plain MAML with S frozen at its initial value
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: METAPPEAR_THREADS or hardware concurrency

    static MetaConfig brdf_defaults();
    static MetaConfig svbrdf_defaults();
    void validate() const;
};

/// Number of worker threads: explicit request, else METAPPEAR_THREADS, else
/// the hardware concurrency; always at least 1.
std::size_t worker_count(std::size_t requested);

/// lr0 * 0.5 * (1 + cos(pi * epoch / total)).
double cosine_anneal(double lr0, double epoch, double total);

/// Inner-step multipliers for the annealed-inner variant: cosine decay over
/// the k steps, 1 at the first step.
std::vector<double> inner_step_scales(std::size_t k);

class Adam {
public:
    explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad, double lr);

    std::size_t size() const { return m_.size(); }
    std::uint64_t steps() const { return t_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }

private:
    double beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<double> m_, v_;
};

struct MetaLogEntry {
    std::size_t epoch = 0;
    double meta_loss = 0.0;  // mean held-out loss over the meta-batch; NaN if skipped
    double wall_clock = 0.0;  // seconds since training started
    double lr = 0.0;
    std::size_t failed_members = 0;
    bool skipped = false;
};

struct TrainingLog {
    std::vector<MetaLogEntry> entries;
    std::size_t skipped_iterations = 0;

    void write_csv(const std::filesystem::path& path) const;
};

struct MetaTrainResult {
    MetaParams meta;
    TrainingLog log;
};

MetaParams initial_meta_params(diff::ParamVector theta0, double s_init);

/// Reduced meta-gradient of one meta-batch (before weight decay).
struct MetaBatchGradient {
    std::vector<double> init;
    std::vector<double> step_sizes;
    double meta_loss = 0.0;
    std::size_t members = 0;  // members that contributed
    std::size_t failed = 0;
};

/// Runs the inner loop of each selected task from `meta` and averages the
/// meta-gradients in ascending task-index order. Member rngs are keyed by
/// (seed, epoch, task index).
MetaBatchGradient meta_batch_gradient(const TaskList& tasks, std::span<const std::size_t> members,
                                      const MetaParams& meta, const MetaConfig& cfg, std::size_t epoch);

/// Task indices for one meta-iteration: without replacement when b <= N.
std::vector<std::size_t> select_tasks(std::size_t n_tasks, std::size_t b, std::uint64_t seed, std::size_t epoch);

using EpochCallback = std::function<void(const MetaLogEntry&, const MetaParams&)>;

/// Optional sharing of meta-parameters: parameter i takes its initial value
/// and step size from group[i]. Meta-gradients are summed within a group.
/// Empty means every parameter is its own group.
struct ParamTying {
    std::vector<std::uint32_t> group;
    std::size_t groups = 0;

    bool empty() const { return group.empty(); }
    void validate(std::size_t n) const;
    /// Replaces every member by its group mean.
    void project(std::span<double> v) const;
};

MetaTrainResult meta_train(const TaskList& tasks, MetaParams init, const MetaConfig& cfg,
                           const EpochCallback& on_epoch = {}, const ParamTying& tying = {});

struct AdaptResult {
    diff::ParamVector adapted;
    double seconds = 0.0;  // update loop only, batches drawn beforehand
    std::size_t steps = 0;
    std::size_t samples_consumed = 0;
    std::vector<double> losses;  // loss on each step's batch, before its update
    double initial_loss = 0.0;  // mean loss of theta_0 over the adaptation batches
    double adapted_loss = 0.0;  // mean loss of theta_k over the same batches
};

AdaptResult adapt(const MetaParams& meta, const diff::Task& task, std::size_t k, Rng& rng,
                  std::span<const double> step_scales = {});

}  // namespace metappear::meta

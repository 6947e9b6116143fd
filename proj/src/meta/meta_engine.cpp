// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/meta/meta_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include "metappear/error.hpp"

namespace metappear::meta {

MetaConfig MetaConfig::brdf_defaults() { return MetaConfig{}; }

MetaConfig MetaConfig::svbrdf_defaults() {
    MetaConfig c;
    c.k = 20;
    c.b = 3;
    c.mode = GradMode::FirstOrder;
    c.cosine_annealing = true;
    c.anneal_inner = true;
    c.meta_lr = 1e-2;
    c.weight_decay = 0.0;
    // Per-channel step sizes come from svbrdf::StepInit and stay fixed.
    c.learn_step_sizes = false;
    return c;
}

void MetaConfig::validate() const {
    if (b < 1) throw invalid_argument("meta-batch size b must be at least 1");
    if (epochs < 1) throw invalid_argument("epochs must be at least 1");
    if (!(meta_lr > 0.0) || !std::isfinite(meta_lr)) throw invalid_argument("meta learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw invalid_argument("weight decay must be non-negative");
    if (!std::isfinite(s_init)) throw invalid_argument("S-init must be finite");
}

std::size_t worker_count(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("METAPPEAR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double cosine_anneal(double lr0, double epoch, double total) {
    if (!(total > 0.0) || epoch < 0.0 || epoch > total)
        throw invalid_argument("cosine_anneal needs 0 <= epoch <= total, total > 0");
    if (epoch == total) return 0.0;
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / total));
}

std::vector<double> inner_step_scales(std::size_t k) {
    std::vector<double> s(k);
    for (std::size_t t = 0; t < k; ++t)
        s[t] = cosine_anneal(1.0, static_cast<double>(t), static_cast<double>(k));
    return s;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw invalid_argument("Adam state length does not match the parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write training log " + path.string());
    out.precision(17);
    out << "epoch,meta_loss,wall_clock,lr\n";
    for (const auto& e : entries) out << e.epoch << ',' << e.meta_loss << ',' << e.wall_clock << ',' << e.lr << '\n';
    if (!out) throw io_error("failed writing training log " + path.string());
}

MetaParams initial_meta_params(diff::ParamVector theta0, double s_init) {
    return MetaParams::with_constant_step(std::move(theta0), s_init);
}

std::vector<std::size_t> select_tasks(std::size_t n_tasks, std::size_t b, std::uint64_t seed, std::size_t epoch) {
    if (n_tasks == 0) throw invalid_argument("task distribution is empty");
    Rng rng(derive_seed({seed, 0x7a5c, epoch}));
    std::vector<std::size_t> picked;
    if (b <= n_tasks) {
        std::vector<std::size_t> idx(n_tasks);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t j = 0; j < b; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, n_tasks - 1);
            std::swap(idx[j], idx[pick(rng)]);
        }
        picked.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b));
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, n_tasks - 1);
        for (std::size_t j = 0; j < b; ++j) picked.push_back(pick(rng));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

namespace {

struct MemberResult {
    std::optional<diff::MetaGradient> grad;
    double loss = 0.0;
};

MemberResult run_member(const diff::Task& task, std::size_t task_index, const MetaParams& meta,
                        const MetaConfig& cfg, std::size_t epoch, std::span<const double> scales) {
    MemberResult out;
    try {
        Rng rng(derive_seed({cfg.seed, epoch, task_index}));
        const auto r = diff::inner_loop(meta, task, cfg.k, cfg.mode, rng, scales);
        auto g = diff::meta_gradient(meta, r.tape, r.heldout_grad, cfg.mode);
        if (diff::all_finite(g.init) && diff::all_finite(g.step_sizes)) {
            out.grad = std::move(g);
            out.loss = r.heldout_loss;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
    }
    return out;
}

}  // namespace

MetaBatchGradient meta_batch_gradient(const TaskList& tasks, std::span<const std::size_t> members,
                                      const MetaParams& meta, const MetaConfig& cfg, std::size_t epoch) {
    const std::vector<double> scales = cfg.anneal_inner ? inner_step_scales(cfg.k) : std::vector<double>{};
    std::vector<MemberResult> results(members.size());
    const std::size_t workers = std::min(worker_count(cfg.threads), members.size());
    if (workers <= 1) {
        for (std::size_t j = 0; j < members.size(); ++j)
            results[j] = run_member(*tasks.at(members[j]), members[j], meta, cfg, epoch, scales);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t j; (j = next.fetch_add(1)) < members.size();)
                        results[j] = run_member(*tasks.at(members[j]), members[j], meta, cfg, epoch, scales);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Reduce in ascending task-index order with an incremental mean, which is
    // exact when all members agree.
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return members[a] < members[b]; });
    MetaBatchGradient mg;
    mg.init.assign(meta.size(), 0.0);
    mg.step_sizes.assign(meta.size(), 0.0);
    for (std::size_t j : order) {
        if (!results[j].grad) {
            ++mg.failed;
            continue;
        }
        const auto& g = *results[j].grad;
        const double w = 1.0 / static_cast<double>(++mg.members);
        for (std::size_t i = 0; i < meta.size(); ++i) {
            mg.init[i] += (g.init[i] - mg.init[i]) * w;
            mg.step_sizes[i] += (g.step_sizes[i] - mg.step_sizes[i]) * w;
        }
        mg.meta_loss += (results[j].loss - mg.meta_loss) * w;
    }
    if (mg.members == 0) mg.meta_loss = std::numeric_limits<double>::quiet_NaN();
    return mg;
}

void ParamTying::validate(std::size_t n) const {
    if (empty()) return;
    if (group.size() != n)
        throw invalid_argument("tying covers " + std::to_string(group.size()) + " parameters, meta has " +
                               std::to_string(n));
    for (std::uint32_t g : group)
        if (g >= groups) throw invalid_argument("tying group " + std::to_string(g) + " out of range");
}

void ParamTying::project(std::span<double> v) const {
    if (empty()) return;
    std::vector<double> sum(groups, 0.0);
    std::vector<std::size_t> count(groups, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum[group[i]] += v[i];
        ++count[group[i]];
    }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sum[group[i]] / static_cast<double>(count[group[i]]);
}

MetaTrainResult meta_train(const TaskList& tasks, MetaParams init, const MetaConfig& cfg,
                           const EpochCallback& on_epoch, const ParamTying& tying) {
    cfg.validate();
    init.validate();
    if (tasks.empty()) throw invalid_argument("task distribution is empty");
    for (const auto& t : tasks)
        if (t->param_count() != init.size())
            throw invalid_argument("task '" + t->name() + "' expects " + std::to_string(t->param_count()) +
                                   " parameters, meta has " + std::to_string(init.size()));
    tying.validate(init.size());

    MetaTrainResult out;
    out.meta = std::move(init);
    const std::size_t n = out.meta.size();
    tying.project(out.meta.init.values());
    tying.project(out.meta.step_sizes);

    // Adam state lives on the free parameters: one per group when tied.
    const std::size_t m = tying.empty() ? n : tying.groups;
    auto free_index = [&](std::size_t i) -> std::size_t { return tying.empty() ? i : tying.group[i]; };
    Adam adam(2 * m);
    std::vector<double> phi(2 * m), grad(2 * m);
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.cosine_annealing
                              ? cosine_anneal(cfg.meta_lr, static_cast<double>(epoch), static_cast<double>(cfg.epochs))
                              : cfg.meta_lr;
        const auto members = select_tasks(tasks.size(), cfg.b, cfg.seed, epoch);
        const MetaBatchGradient mg = meta_batch_gradient(tasks, members, out.meta, cfg, epoch);

        MetaLogEntry entry;
        entry.epoch = epoch;
        entry.lr = lr;
        entry.failed_members = mg.failed;
        entry.meta_loss = mg.meta_loss;
        if (mg.members == 0) {
            entry.skipped = true;
            ++out.log.skipped_iterations;
        } else {
            auto theta = out.meta.init.values();
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t f = free_index(i);
                phi[f] = theta[i];
                phi[m + f] = out.meta.step_sizes[i];
                grad[f] += mg.init[i];
                if (cfg.learn_step_sizes) grad[m + f] += mg.step_sizes[i];
            }
            for (std::size_t f = 0; f < m; ++f) grad[f] += cfg.weight_decay * phi[f];
            adam.step(phi, grad, lr);
            if (diff::all_finite(phi)) {
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t f = free_index(i);
                    theta[i] = phi[f];
                    if (cfg.learn_step_sizes) out.meta.step_sizes[i] = phi[m + f];
                }
            } else {
                entry.skipped = true;
                ++out.log.skipped_iterations;
            }
        }
        entry.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.log.entries.push_back(entry);
        if (on_epoch) on_epoch(entry, out.meta);
    }
    return out;
}

AdaptResult adapt(const MetaParams& meta, const diff::Task& task, std::size_t k, Rng& rng,
                  std::span<const double> step_scales) {
    meta.validate();
    const std::size_t n = meta.size();
    if (task.param_count() != n)
        throw invalid_argument("task expects " + std::to_string(task.param_count()) + " parameters, meta has " +
                               std::to_string(n));
    if (!step_scales.empty() && step_scales.size() != k)
        throw invalid_argument("step scale count does not match k");

    std::vector<diff::BatchPtr> batches;
    batches.reserve(k);
    AdaptResult r;
    for (std::size_t t = 0; t < k; ++t) {
        batches.push_back(task.adaptation_batch(t, rng));
        r.samples_consumed += batches.back()->sample_count();
    }

    std::vector<double> theta(meta.init.values().begin(), meta.init.values().end());
    std::vector<double> grad(n);
    r.losses.reserve(k);
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < k; ++t) {
        r.losses.push_back(batches[t]->loss_and_grad(theta, grad));
        const double c = step_scales.empty() ? 1.0 : step_scales[t];
        for (std::size_t i = 0; i < n; ++i) theta[i] -= c * meta.step_sizes[i] * grad[i];
        if (!diff::all_finite(theta))
            throw numerical_error("non-finite parameter update at inner step " + std::to_string(t), t);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.steps = k;

    for (const auto& b : batches) {
        r.initial_loss += b->loss(meta.init.values());
        r.adapted_loss += b->loss(theta);
    }
    if (k > 0) {
        r.initial_loss /= static_cast<double>(k);
        r.adapted_loss /= static_cast<double>(k);
    }
    r.adapted = diff::ParamVector(meta.init.arch(), std::move(theta));
    return r;
}

}  // namespace metappear::meta

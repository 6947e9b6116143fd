// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/app/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "metappear/data/merl.hpp"
#include "metappear/data/synthetic.hpp"
#include "metappear/error.hpp"
#include "metappear/regimes/regimes.hpp"

namespace metappear::app {

BrdfTasks make_brdf_tasks(const io::ExperimentConfig& cfg) {
    BrdfTasks out;
    if (cfg.data.merl_dir.empty()) {
        const std::size_t n = cfg.data.train_tasks + cfg.data.test_tasks;
        const auto family = data::make_synthetic_family(n, cfg.data.data_seed);
        for (std::size_t i = 0; i < n; ++i) {
            auto task = std::make_shared<const nbrdf::NbrdfTask>(data::BrdfSource(family[i]));
            (i < cfg.data.train_tasks ? out.train : out.test).push_back(std::move(task));
        }
        return out;
    }

    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.data.merl_dir, ec))
        if (entry.path().extension() == ".binary") files.push_back(entry.path());
    if (ec) throw io_error("cannot list " + cfg.data.merl_dir + ": " + ec.message());
    if (files.size() < 2) throw invalid_argument("need at least two .binary files in " + cfg.data.merl_dir);
    std::sort(files.begin(), files.end());
    const data::TrainTestSplit split = data::split_indices(files.size(), cfg.data.data_seed);
    auto load = [&](std::size_t i) {
        auto merl = std::make_shared<const data::MerlBrdf>(data::load_merl(files[i]));
        return std::make_shared<const nbrdf::NbrdfTask>(
            data::BrdfSource(std::move(merl), derive_seed({cfg.data.data_seed, i})));
    };
    for (std::size_t i : split.train) out.train.push_back(load(i));
    for (std::size_t i : split.test) out.test.push_back(load(i));
    return out;
}

FlashTasks make_flash_tasks(const io::ExperimentConfig& cfg) {
    const std::size_t n = cfg.data.train_tasks + cfg.data.test_tasks;
    auto all = svbrdf::make_synthetic_flash_tasks(n, cfg.data.data_seed, cfg.flash);
    FlashTasks out;
    for (std::size_t i = 0; i < n; ++i) {
        auto task = std::make_shared<const svbrdf::FlashTask>(std::move(all[i]));
        (i < cfg.data.train_tasks ? out.train : out.test).push_back(std::move(task));
    }
    return out;
}

std::vector<double> adaptation_scales(const meta::MetaConfig& cfg) {
    return cfg.anneal_inner ? meta::inner_step_scales(cfg.k) : std::vector<double>{};
}

TrainedMeta train_meta(const io::ExperimentConfig& cfg, const meta::EpochCallback& on_epoch) {
    const meta::MetaConfig mc = cfg.meta_config();
    meta::TaskList tasks;
    diff::MetaParams init;
    meta::ParamTying tying;
    if (cfg.application == io::Application::Brdf) {
        for (auto& t : make_brdf_tasks(cfg).train) tasks.push_back(t);
        Rng rng(derive_seed({cfg.seed, 0x1a17}));
        init = meta::initial_meta_params(nbrdf::random_init(nbrdf::nbrdf_arch(), rng), mc.s_init);
    } else {
        for (auto& t : make_flash_tasks(cfg).train) tasks.push_back(t);
        init = svbrdf::initial_svbrdf_meta(svbrdf::neutral_maps(cfg.flash.resolution), cfg.step_init);
        tying = svbrdf::channel_tying(cfg.flash.resolution);
    }
    if (tasks.empty()) throw invalid_argument("meta-training needs at least one training task");
    TrainedMeta out;
    out.result = meta::meta_train(tasks, std::move(init), mc, on_epoch, tying);
    out.checkpoint = io::Checkpoint::from_meta(
        out.result.meta, {mc.epochs, cfg.seed, cfg.hash(), io::to_string(cfg.application)});
    return out;
}

diff::MetaParams load_meta(const std::filesystem::path& path, const io::ExperimentConfig& cfg) {
    const io::Checkpoint ck = io::load_checkpoint(path);
    diff::MetaParams m = ck.meta();
    if (cfg.application == io::Application::Brdf) {
        nbrdf::check_nbrdf_arch(m.init.arch());
    } else if (!(m.init.arch() == diff::Architecture::pixel_grid(svbrdf::kChannels, cfg.flash.resolution,
                                                                  cfg.flash.resolution))) {
        throw invalid_argument("checkpoint " + path.string() + " holds " + m.init.arch().describe() +
                               ", expected svBRDF maps at resolution " + std::to_string(cfg.flash.resolution));
    }
    return m;
}

double median(std::vector<double> v) {
    if (v.empty()) throw invalid_argument("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace {

// Runs `run` timing_runs times with identical seeds, keeps the first result
// and reports the median wall-clock.
template <class F>
CompareRow timed(const std::string& task, std::size_t runs, std::size_t params, F&& run) {
    std::vector<double> seconds;
    regimes::RegimeResult first;
    for (std::size_t i = 0; i < runs; ++i) {
        regimes::RegimeResult r = run();
        if (r.diverged) throw numerical_error(r.regime + " diverged on task " + task, r.curve.size());
        seconds.push_back(r.seconds);
        if (i == 0) first = std::move(r);
    }
    CompareRow row;
    row.task = task;
    row.regime = first.regime;
    row.error = first.error;
    row.params = params;
    row.seconds = median(seconds);
    row.samples = first.samples;
    row.curve = std::move(first.curve);
    return row;
}

std::vector<CompareRow> compare_brdf(const io::ExperimentConfig& cfg, const diff::MetaParams& meta) {
    const BrdfTasks tasks = make_brdf_tasks(cfg);
    std::vector<const nbrdf::NbrdfTask*> train;
    for (const auto& t : tasks.train) train.push_back(t.get());
    regimes::GeneralConfig gcfg = cfg.general;
    gcfg.seed = cfg.seed;
    const regimes::AutoDecoder general = regimes::run_general(train, gcfg);
    const std::vector<double> scales = adaptation_scales(cfg.meta);
    const std::size_t runs = cfg.timing_runs;

    std::vector<CompareRow> rows;
    for (std::size_t j = 0; j < tasks.test.size(); ++j) {
        const nbrdf::NbrdfTask& task = *tasks.test[j];
        const regimes::Evaluator eval = regimes::nbrdf_evaluator(task, 8192, derive_seed({cfg.seed, j}));
        auto rng_for = [&](std::uint64_t regime) { return Rng(derive_seed({cfg.seed, j, regime})); };
        rows.push_back(timed(task.name(), runs, general.decoder.size(), [&] {
            Rng rng = rng_for(0);
            return regimes::general_result(general, task, gcfg, rng, eval);
        }));
        rows.push_back(timed(task.name(), runs, nbrdf::kParamCount, [&] {
            Rng rng = rng_for(1);
            return regimes::run_overfit(task, cfg.overfit.iterations, cfg.overfit.lr, rng, eval);
        }));
        rows.push_back(timed(task.name(), runs, nbrdf::kParamCount, [&] {
            Rng rng = rng_for(2);
            return regimes::run_finetune(general, task, cfg.finetune.steps,
                                         cfg.overfit.lr * cfg.finetune.lr_multiplier, gcfg, rng, eval);
        }));
        rows.push_back(timed(task.name(), runs, meta.init.size() + meta.step_sizes.size(), [&] {
            Rng rng = rng_for(3);
            return regimes::run_meta(meta, task, cfg.meta.k, rng, eval, scales);
        }));
    }
    return rows;
}

std::vector<CompareRow> compare_svbrdf(const io::ExperimentConfig& cfg, const diff::MetaParams& meta) {
    const FlashTasks tasks = make_flash_tasks(cfg);
    const std::vector<double> scales = adaptation_scales(cfg.meta);
    std::vector<CompareRow> rows;
    for (std::size_t j = 0; j < tasks.test.size(); ++j) {
        const svbrdf::FlashTask& task = *tasks.test[j];
        const regimes::Evaluator eval = [&task](const diff::ParamVector& p) {
            return svbrdf::heldout_photometric_error(svbrdf::SvBrdfMaps::from_params(p), task);
        };
        rows.push_back(timed(task.name(), cfg.timing_runs, task.param_count(), [&] {
            Rng rng(derive_seed({cfg.seed, j, 1}));
            diff::ParamVector init = svbrdf::random_maps(task.resolution(), rng).params();
            return regimes::run_overfit(task, std::move(init), cfg.overfit.iterations, cfg.overfit.lr, rng, eval);
        }));
        rows.push_back(timed(task.name(), cfg.timing_runs, meta.init.size() + meta.step_sizes.size(), [&] {
            Rng rng(derive_seed({cfg.seed, j, 3}));
            return regimes::run_meta(meta, task, cfg.meta.k, rng, eval, scales);
        }));
    }
    return rows;
}

}  // namespace

std::vector<CompareRow> compare(const io::ExperimentConfig& cfg, const diff::MetaParams& meta) {
    return cfg.application == io::Application::Brdf ? compare_brdf(cfg, meta) : compare_svbrdf(cfg, meta);
}

std::vector<RegimeSummary> summarize(const std::vector<CompareRow>& rows) {
    std::vector<RegimeSummary> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::size_t> counts;
    for (const CompareRow& r : rows) {
        auto [it, fresh] = index.try_emplace(r.regime, out.size());
        if (fresh) {
            out.push_back({r.regime, 0.0, r.params, 0.0, r.samples, std::nullopt});
            counts.push_back(0);
        }
        RegimeSummary& s = out[it->second];
        s.error += r.error;
        s.seconds += r.seconds;
        ++counts[it->second];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].error /= static_cast<double>(counts[i]);
        out[i].seconds /= static_cast<double>(counts[i]);
    }
    const auto base = index.find("general");
    if (base != index.end()) {
        const RegimeSummary& b = out[base->second];
        for (RegimeSummary& s : out)
            if (s.regime != "general") s.err = regimes::err_index(s.seconds, b.seconds, b.error, s.error);
    }
    return out;
}

std::vector<CompareRow> read_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open fixture " + path.string());
    std::vector<CompareRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("regime,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string regime, error, params, seconds;
        if (!std::getline(ss, regime, ',') || !std::getline(ss, error, ',') || !std::getline(ss, params, ',') ||
            !std::getline(ss, seconds, ','))
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": expected regime,error,params,seconds");
        CompareRow r;
        r.task = "fixture";
        r.regime = regime;
        try {
            r.error = std::stod(error);
            r.params = static_cast<std::size_t>(std::stoull(params));
            r.seconds = std::stod(seconds);
        } catch (const std::exception&) {
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw format_error(path.string() + ": no rows");
    return rows;
}

std::string format_table(const std::vector<RegimeSummary>& summary) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %12s %10s %12s %10s\n", "Regime", "Error", "Params", "Time[s]", "ERR");
    out += buf;
    for (const RegimeSummary& s : summary) {
        char err[32] = "---";
        if (s.err) std::snprintf(err, sizeof err, "%.1f", *s.err);
        std::snprintf(buf, sizeof buf, "%-10s %12.4f %10zu %12.4g %10s\n", s.regime.c_str(), s.error, s.params,
                      s.seconds, err);
        out += buf;
    }
    return out;
}

void write_rows_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "task,regime,error,params,seconds,samples,iterations\n";
    out.precision(17);
    for (const CompareRow& r : rows)
        out << r.task << ',' << r.regime << ',' << r.error << ',' << r.params << ',' << r.seconds << ','
            << r.samples << ',' << r.curve.size() << '\n';
}

void write_curves_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "task,regime,iteration,loss\n";
    out.precision(17);
    for (const CompareRow& r : rows)
        for (std::size_t i = 0; i < r.curve.size(); ++i)
            out << r.task << ',' << r.regime << ',' << i << ',' << r.curve[i] << '\n';
}

}  // namespace metappear::app

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metappear/app/artifacts.hpp"
#include "metappear/app/experiment.hpp"
#include "metappear/data/merl.hpp"
#include "metappear/data/sampling.hpp"
#include "metappear/error.hpp"
#include "metappear/io/checkpoint.hpp"
#include "metappear/io/config.hpp"
#include "metappear/meta/meta_engine.hpp"
#include "metappear/regimes/regimes.hpp"
#include "metappear/render/flash.hpp"
#include "metappear/render/sphere.hpp"

namespace fs = std::filesystem;
using namespace metappear;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUserError = 1, kNumerical = 2 };

// Config sources in increasing precedence: application defaults, --config
// file, --set key=value, then the dedicated flags.
struct ConfigFlags {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<std::string> application;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> k;
    std::optional<std::size_t> epochs;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "JSON experiment config");
        cmd->add_option("--set", sets, "override a config field, e.g. --set meta.k=20")->take_all();
        cmd->add_option("--application", application, "brdf or svbrdf");
        cmd->add_option("--seed", seed, "experiment seed");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--k", k, "inner-loop steps");
        cmd->add_option("--epochs", epochs, "meta-training epochs");
    }

    io::ExperimentConfig resolve() const {
        json j = config_file.empty() ? json::object() : app::read_json(config_file);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw invalid_argument("--set expects key=value, got '" + s + "'");
            io::apply_override(j, s.substr(0, eq), s.substr(eq + 1));
        }
        if (application) j["application"] = *application;
        if (seed) j["seed"] = *seed;
        if (out) j["output_dir"] = *out;
        if (k) j["meta"]["k"] = *k;
        if (epochs) j["meta"]["epochs"] = *epochs;
        return io::ExperimentConfig::from_json(j);
    }
};

fs::path prepare_out(const io::ExperimentConfig& cfg) {
    const fs::path out(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw io_error("cannot create " + out.string() + ": " + ec.message());
    return out;
}

render::RenderConfig sphere_config(std::size_t resolution) {
    render::RenderConfig rc;
    rc.resolution = resolution;
    rc.light_dir = normalize(Vec3{0.4, 0.5, 1.0});
    return rc;
}

void write_image(const render::Image& img, const fs::path& stem) {
    render::write_png(img, fs::path(stem.string() + ".png"));
    render::write_raw(img, fs::path(stem.string() + ".raw"));
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const std::string& kind, std::size_t n, std::uint64_t seed, const fs::path& out, bool merl,
                 std::size_t resolution) {
    if (n == 0) throw invalid_argument("gen-data needs n >= 1");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw io_error("cannot create " + out.string() + ": " + ec.message());
    char name[64];
    if (kind == "brdf") {
        const auto family = data::make_synthetic_family(n, seed);
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(name, sizeof name, "brdf_%03zu", i);
            app::write_json(app::spec_to_json(family[i]), out / (std::string(name) + ".json"));
            if (merl) {
                const data::SyntheticBrdfSpec& spec = family[i];
                const auto table = data::MerlBrdf::tabulate(spec.name, [&spec](const data::DirectionPair& p) {
                    return data::eval_synthetic(spec, p.wi, p.wo);
                });
                data::save_merl(table, out / (std::string(name) + ".binary"));
            }
        }
    } else if (kind == "svbrdf") {
        svbrdf::SyntheticFlashConfig fc;
        fc.resolution = resolution;
        const auto tasks = svbrdf::make_synthetic_flash_tasks(n, seed, fc);
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(name, sizeof name, "flash_%03zu", i);
            app::save_flash_task(tasks[i], out / name);
        }
    } else {
        throw invalid_argument("unknown data kind '" + kind + "' (expected brdf or svbrdf)");
    }
    std::printf("wrote %zu %s tasks to %s\n", n, kind.c_str(), out.string().c_str());
    return kOk;
}

// ---------------------------------------------------------------- meta-train

int cmd_meta_train(const io::ExperimentConfig& cfg) {
    const fs::path out = prepare_out(cfg);
    io::save_config(cfg, out / "config.json");
    const std::size_t every = std::max<std::size_t>(1, cfg.meta.epochs / 20);
    const app::TrainedMeta trained = app::train_meta(cfg, [&](const meta::MetaLogEntry& e, const diff::MetaParams&) {
        if ((e.epoch + 1) % every == 0)
            std::printf("epoch %zu/%zu meta-loss %.5f lr %.3g\n", e.epoch + 1, cfg.meta.epochs, e.meta_loss, e.lr);
    });
    io::save_checkpoint(trained.checkpoint, out / "meta.ckpt");
    trained.result.log.write_csv(out / "train_log.csv");
    std::printf("meta checkpoint: %zu values (%s), %zu skipped iterations\n", trained.checkpoint.value_count(),
                trained.checkpoint.arch.describe().c_str(), trained.result.log.skipped_iterations);
    return kOk;
}

// ---------------------------------------------------------------- adapt

int cmd_adapt(const io::ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& task_path) {
    const fs::path out = prepare_out(cfg);
    const diff::MetaParams meta = app::load_meta(checkpoint, cfg);
    const std::vector<double> scales = app::adaptation_scales(cfg.meta);
    const std::size_t k = cfg.meta.k;

    std::shared_ptr<const diff::Task> task;
    std::optional<svbrdf::FlashTask> flash;
    if (cfg.application == io::Application::Brdf) {
        if (task_path.extension() == ".binary") {
            auto merl = std::make_shared<const data::MerlBrdf>(data::load_merl(task_path));
            task = std::make_shared<const nbrdf::NbrdfTask>(data::BrdfSource(std::move(merl), cfg.data.data_seed));
        } else {
            task = std::make_shared<const nbrdf::NbrdfTask>(
                data::BrdfSource(app::spec_from_json(app::read_json(task_path))));
        }
    } else {
        flash = app::load_flash_task(task_path);
        task = std::make_shared<const svbrdf::FlashTask>(*flash);
    }

    std::vector<double> seconds;
    meta::AdaptResult first;
    for (std::size_t run = 0; run < cfg.timing_runs; ++run) {
        Rng rng(derive_seed({cfg.seed, 0xada}));
        meta::AdaptResult a = k == 0 ? meta::adapt(meta, *task, 0, rng) : meta::adapt(meta, *task, k, rng, scales);
        seconds.push_back(a.seconds);
        if (run == 0) first = std::move(a);
    }

    io::TrainingMetadata md{0, cfg.seed, cfg.hash(), io::to_string(cfg.application)};
    io::save_checkpoint(io::Checkpoint::from_params(first.adapted, md), out / "adapted.ckpt");
    double error = 0.0;
    if (flash) {
        const svbrdf::SvBrdfMaps maps = svbrdf::SvBrdfMaps::from_params(first.adapted);
        write_image(render::render_flash(maps, flash->config()), out / "adapted");
        app::write_maps(maps, out, "adapted_");
        error = svbrdf::heldout_photometric_error(maps, *flash);
    } else {
        write_image(render::render_sphere(render::nbrdf_brdf(first.adapted), sphere_config(256)), out / "adapted");
        const auto& nt = static_cast<const nbrdf::NbrdfTask&>(*task);
        error = regimes::nbrdf_evaluator(nt, 8192, cfg.seed)(first.adapted);
    }
    const json record = {{"task", task->name()},
                         {"k", k},
                         {"samples", first.samples_consumed},
                         {"seconds_median", app::median(seconds)},
                         {"seconds_runs", seconds},
                         {"initial_loss", first.initial_loss},
                         {"adapted_loss", first.adapted_loss},
                         {"heldout_error", error}};
    app::write_json(record, out / "timing.json");
    std::printf("adapted %s in %zu steps: %zu samples, %.4g s (median of %zu), held-out error %.5f\n",
                task->name().c_str(), k, first.samples_consumed, app::median(seconds), seconds.size(), error);
    return kOk;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const io::ExperimentConfig& cfg, const std::string& checkpoint, const std::string& fixture) {
    const fs::path out = prepare_out(cfg);
    std::vector<app::CompareRow> rows;
    if (!fixture.empty()) {
        rows = app::read_fixture(fixture);
    } else {
        if (checkpoint.empty()) throw invalid_argument("compare needs --checkpoint or --fixture");
        rows = app::compare(cfg, app::load_meta(checkpoint, cfg));
        app::write_rows_csv(rows, out / "compare.csv");
        app::write_curves_csv(rows, out / "curves.csv");
    }
    const auto summary = app::summarize(rows);
    std::string report = app::format_table(summary);
    for (const auto& s : summary)
        if (s.regime == "meta" && s.samples > 0 && cfg.application == io::Application::Brdf) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "samples per material: %zu of %zu table entries, ratio 1:%zu\n", s.samples,
                          regimes::kMerlTableEntries, regimes::compression_ratio(regimes::kMerlTableEntries, s.samples));
            report += buf;
        }
    std::fputs(report.c_str(), stdout);
    std::ofstream(out / "report.txt") << report;
    return kOk;
}

// ---------------------------------------------------------------- render

int cmd_render(const io::ExperimentConfig& cfg, const std::string& checkpoint, const std::string& spec,
               const std::string& maps_dir, std::size_t resolution) {
    const fs::path out = prepare_out(cfg);
    const int given = !checkpoint.empty() + !spec.empty() + !maps_dir.empty();
    if (given != 1) throw invalid_argument("render needs exactly one of --checkpoint, --spec, --maps");
    if (!spec.empty()) {
        const data::SyntheticBrdfSpec s = app::spec_from_json(app::read_json(spec));
        write_image(render::render_sphere(render::pointwise([&s](const Vec3& wi, const Vec3& wo) {
                                              return data::eval_synthetic(s, wi, wo);
                                          }),
                                          sphere_config(resolution)),
                    out / "render");
    } else if (!maps_dir.empty()) {
        write_image(render::render_flash(app::read_maps(maps_dir, "truth_"), cfg.flash.flash), out / "render");
    } else {
        const io::Checkpoint ck = io::load_checkpoint(checkpoint);
        const diff::ParamVector p = ck.kind == io::CheckpointKind::Meta ? ck.meta().init : ck.params();
        if (p.arch().kind == diff::ArchKind::PixelGrid) {
            const svbrdf::SvBrdfMaps maps = svbrdf::SvBrdfMaps::from_params(p);
            write_image(render::render_flash(maps, cfg.flash.flash), out / "render");
            app::write_maps(maps, out, "render_");
        } else {
            nbrdf::check_nbrdf_arch(p.arch());
            write_image(render::render_sphere(render::nbrdf_brdf(p), sphere_config(resolution)), out / "render");
        }
    }
    std::printf("wrote %s\n", (out / "render.png").string().c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"metappear: meta-learned appearance reproduction"};
    cli.require_subcommand(1);

    std::string kind = "brdf", data_out = "data";
    std::size_t n = 100, resolution = svbrdf::kDefaultResolution;
    std::uint64_t data_seed = 0;
    bool merl = false;
    auto* gen = cli.add_subcommand("gen-data", "write synthetic BRDF specs or flash tasks");
    gen->add_option("--kind", kind, "brdf or svbrdf");
    gen->add_option("--n", n, "number of tasks");
    gen->add_option("--seed", data_seed, "generator seed");
    gen->add_option("--out", data_out, "output directory");
    gen->add_option("--resolution", resolution, "flash map resolution");
    gen->add_flag("--merl", merl, "also tabulate each BRDF as a MERL binary");

    ConfigFlags train_flags, adapt_flags, compare_flags, render_flags;
    auto* train = cli.add_subcommand("meta-train", "meta-train an initialization and step sizes");
    train_flags.attach(train);

    std::string ckpt, task_path;
    auto* adapt = cli.add_subcommand("adapt", "adapt a meta checkpoint to one task");
    adapt_flags.attach(adapt);
    adapt->add_option("--checkpoint", ckpt, "meta checkpoint")->required();
    adapt->add_option("--task", task_path, "BRDF spec (.json), MERL file (.binary) or flash task directory")
        ->required();

    std::string compare_ckpt, fixture;
    auto* cmp = cli.add_subcommand("compare", "run every regime on the held-out tasks and report ERR");
    compare_flags.attach(cmp);
    cmp->add_option("--checkpoint", compare_ckpt, "meta checkpoint");
    cmp->add_option("--fixture", fixture, "CSV of regime,error,params,seconds instead of measuring");

    std::string render_ckpt, render_spec, render_maps;
    std::size_t render_res = 256;
    auto* rnd = cli.add_subcommand("render", "render a checkpoint, BRDF spec or map set");
    render_flags.attach(rnd);
    rnd->add_option("--checkpoint", render_ckpt, "checkpoint (meta checkpoints render their initialization)");
    rnd->add_option("--spec", render_spec, "synthetic BRDF spec (.json)");
    rnd->add_option("--maps", render_maps, "flash task directory with truth maps");
    rnd->add_option("--resolution", render_res, "sphere image resolution");

    double rho_m = 0, rho_b = 0, delta_b = 0, delta_m = 0;
    auto* err = cli.add_subcommand("err", "error-to-runtime ratio (rho_m / rho_b) / (delta_b / delta_m)");
    err->add_option("--rho-m", rho_m, "method runtime")->required();
    err->add_option("--rho-b", rho_b, "baseline runtime")->required();
    err->add_option("--delta-b", delta_b, "baseline error")->required();
    err->add_option("--delta-m", delta_m, "method error")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kUserError;
    }

    try {
        if (*gen) return cmd_gen_data(kind, n, data_seed, data_out, merl, resolution);
        if (*train) return cmd_meta_train(train_flags.resolve());
        if (*adapt) return cmd_adapt(adapt_flags.resolve(), ckpt, task_path);
        if (*cmp) return cmd_compare(compare_flags.resolve(), compare_ckpt, fixture);
        if (*rnd) return cmd_render(render_flags.resolve(), render_ckpt, render_spec, render_maps, render_res);
        if (*err) {
            std::printf("%.4f\n", regimes::err_index(rho_m, rho_b, delta_b, delta_m));
            return kOk;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == ErrorKind::Numerical ? kNumerical : kUserError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUserError;
    }
    return kUserError;
}

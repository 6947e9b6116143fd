// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/io/config.hpp"

#include <cmath>
#include <fstream>

#include "metappear/error.hpp"
#include "metappear/io/checkpoint.hpp"

namespace metappear::io {

using nlohmann::json;

const char* to_string(Application app) { return app == Application::Brdf ? "brdf" : "svbrdf"; }

Application application_from_string(const std::string& name) {
    if (name == "brdf") return Application::Brdf;
    if (name == "svbrdf") return Application::Svbrdf;
    throw invalid_argument("unknown application '" + name + "' (expected brdf or svbrdf)");
}

ExperimentConfig ExperimentConfig::defaults(Application app) {
    ExperimentConfig c;
    c.application = app;
    if (app == Application::Brdf) {
        c.meta = meta::MetaConfig::brdf_defaults();
        return c;
    }
    c.meta = meta::MetaConfig::svbrdf_defaults();
    c.meta.epochs = 1000;
    c.data.train_tasks = 40;
    c.data.test_tasks = 10;
    c.overfit.iterations = 5000;
    c.overfit.lr = 1e-2;
    c.finetune.lr_multiplier = 10.0;
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["application"] = to_string(application);
    j["regime"] = regime;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["timing_runs"] = timing_runs;
    j["data"] = {{"train_tasks", data.train_tasks},
                 {"test_tasks", data.test_tasks},
                 {"data_seed", data.data_seed},
                 {"merl_dir", data.merl_dir}};
    j["meta"] = {{"k", meta.k},
                 {"b", meta.b},
                 {"mode", diff::to_string(meta.mode)},
                 {"meta_lr", meta.meta_lr},
                 {"weight_decay", meta.weight_decay},
                 {"cosine_annealing", meta.cosine_annealing},
                 {"anneal_inner", meta.anneal_inner},
                 {"epochs", meta.epochs},
                 {"s_init", meta.s_init},
                 {"learn_step_sizes", meta.learn_step_sizes},
                 {"threads", meta.threads}};
    j["overfit"] = {{"iterations", overfit.iterations}, {"lr", overfit.lr}};
    j["general"] = {{"iterations", general.iterations},
                    {"lr", general.lr},
                    {"tasks_per_batch", general.tasks_per_batch},
                    {"batch_size", general.batch_size},
                    {"latent_l2", general.latent_l2},
                    {"latent_init_std", general.latent_init_std},
                    {"inference_steps", general.inference_steps},
                    {"inference_lr", general.inference_lr}};
    j["finetune"] = {{"steps", finetune.steps}, {"lr_multiplier", finetune.lr_multiplier}};
    j["ablation"] = {{"smart_steps", ablation.smart_steps},
                     {"adam_steps", ablation.adam_steps},
                     {"adam_lr", ablation.adam_lr},
                     {"meta_k", ablation.meta_k}};
    j["svbrdf"] = {{"resolution", flash.resolution},
                   {"light_height", flash.flash.light_height},
                   {"extent", flash.flash.extent},
                   {"intensity", flash.flash.intensity},
                   {"heldout_fraction", flash.heldout_fraction},
                   {"lambda", flash.lambda},
                   {"step_init",
                    {{"diffuse", step_init.diffuse},
                     {"specular", step_init.specular},
                     {"roughness", step_init.roughness},
                     {"height", step_init.height}}}};
    return j;
}

namespace {

bool same_type(const json& given, const json& reference) {
    if (reference.is_object()) return given.is_object();
    if (reference.is_boolean()) return given.is_boolean();
    if (reference.is_string()) return given.is_string();
    if (reference.is_number_unsigned()) return given.is_number_integer() && given.get<std::int64_t>() >= 0;
    if (reference.is_number()) return given.is_number();
    return false;
}

const char* type_name(const json& reference) {
    if (reference.is_object()) return "an object";
    if (reference.is_boolean()) return "a boolean";
    if (reference.is_string()) return "a string";
    if (reference.is_number_unsigned()) return "a non-negative integer";
    return "a number";
}

// Every key in `given` must exist in `reference` with a compatible type.
void check_keys(const json& given, const json& reference, const std::string& prefix) {
    if (!given.is_object()) throw invalid_argument("config" + (prefix.empty() ? "" : " section '" + prefix + "'") + " must be an object");
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!reference.contains(it.key())) throw invalid_argument("unknown config key '" + key + "'");
        const json& ref = reference.at(it.key());
        if (!same_type(*it, ref)) throw invalid_argument("config key '" + key + "' must be " + type_name(ref));
        if (ref.is_object()) check_keys(*it, ref, key);
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw invalid_argument("config must be a JSON object");
    Application app = Application::Brdf;
    if (j.contains("application")) {
        if (!j["application"].is_string()) throw invalid_argument("config key 'application' must be a string");
        app = application_from_string(j["application"].get<std::string>());
    }
    json merged = defaults(app).to_json();
    check_keys(j, merged, "");
    merged.merge_patch(j);

    ExperimentConfig c;
    c.application = app;
    c.regime = merged["regime"].get<std::string>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.output_dir = merged["output_dir"].get<std::string>();
    c.timing_runs = merged["timing_runs"].get<std::size_t>();

    const json& d = merged["data"];
    c.data.train_tasks = d["train_tasks"].get<std::size_t>();
    c.data.test_tasks = d["test_tasks"].get<std::size_t>();
    c.data.data_seed = d["data_seed"].get<std::uint64_t>();
    c.data.merl_dir = d["merl_dir"].get<std::string>();

    const json& m = merged["meta"];
    c.meta.k = m["k"].get<std::size_t>();
    c.meta.b = m["b"].get<std::size_t>();
    c.meta.mode = diff::grad_mode_from_string(m["mode"].get<std::string>());
    c.meta.meta_lr = m["meta_lr"].get<double>();
    c.meta.weight_decay = m["weight_decay"].get<double>();
    c.meta.cosine_annealing = m["cosine_annealing"].get<bool>();
    c.meta.anneal_inner = m["anneal_inner"].get<bool>();
    c.meta.epochs = m["epochs"].get<std::size_t>();
    c.meta.s_init = m["s_init"].get<double>();
    c.meta.learn_step_sizes = m["learn_step_sizes"].get<bool>();
    c.meta.threads = m["threads"].get<std::size_t>();

    c.overfit.iterations = merged["overfit"]["iterations"].get<std::size_t>();
    c.overfit.lr = merged["overfit"]["lr"].get<double>();

    const json& g = merged["general"];
    c.general.iterations = g["iterations"].get<std::size_t>();
    c.general.lr = g["lr"].get<double>();
    c.general.tasks_per_batch = g["tasks_per_batch"].get<std::size_t>();
    c.general.batch_size = g["batch_size"].get<std::size_t>();
    c.general.latent_l2 = g["latent_l2"].get<double>();
    c.general.latent_init_std = g["latent_init_std"].get<double>();
    c.general.inference_steps = g["inference_steps"].get<std::size_t>();
    c.general.inference_lr = g["inference_lr"].get<double>();

    c.finetune.steps = merged["finetune"]["steps"].get<std::size_t>();
    c.finetune.lr_multiplier = merged["finetune"]["lr_multiplier"].get<double>();

    const json& a = merged["ablation"];
    c.ablation.smart_steps = a["smart_steps"].get<std::size_t>();
    c.ablation.adam_steps = a["adam_steps"].get<std::size_t>();
    c.ablation.adam_lr = a["adam_lr"].get<double>();
    c.ablation.meta_k = a["meta_k"].get<std::size_t>();

    const json& s = merged["svbrdf"];
    c.flash.resolution = s["resolution"].get<std::size_t>();
    c.flash.flash.light_height = s["light_height"].get<double>();
    c.flash.flash.extent = s["extent"].get<double>();
    c.flash.flash.intensity = s["intensity"].get<double>();
    c.flash.heldout_fraction = s["heldout_fraction"].get<double>();
    c.flash.lambda = s["lambda"].get<double>();
    c.step_init.diffuse = s["step_init"]["diffuse"].get<double>();
    c.step_init.specular = s["step_init"]["specular"].get<double>();
    c.step_init.roughness = s["step_init"]["roughness"].get<double>();
    c.step_init.height = s["step_init"]["height"].get<double>();

    c.validate();
    return c;
}

meta::MetaConfig ExperimentConfig::meta_config() const {
    meta::MetaConfig m = meta;
    m.seed = seed;
    return m;
}

void ExperimentConfig::validate() const {
    if (regime != "meta" && regime != "overfit" && regime != "general" && regime != "finetune")
        throw invalid_argument("unknown regime '" + regime + "' (expected meta, overfit, general or finetune)");
    if (output_dir.empty()) throw invalid_argument("output_dir must not be empty");
    if (timing_runs < 1) throw invalid_argument("timing_runs must be at least 1");
    if (data.test_tasks < 1) throw invalid_argument("data.test_tasks must be at least 1");
    meta.validate();
    if (overfit.iterations < 1) throw invalid_argument("overfit.iterations must be at least 1");
    if (!(overfit.lr > 0.0)) throw invalid_argument("overfit.lr must be positive");
    if (!(general.lr > 0.0) || !(general.inference_lr > 0.0)) throw invalid_argument("general learning rates must be positive");
    if (!(finetune.lr_multiplier > 0.0)) throw invalid_argument("finetune.lr_multiplier must be positive");
    if (!(ablation.adam_lr > 0.0)) throw invalid_argument("ablation.adam_lr must be positive");
    flash.flash.validate();
    if (flash.resolution < 2) throw invalid_argument("svbrdf.resolution must be at least 2");
    if (!(flash.heldout_fraction > 0.0 && flash.heldout_fraction < 1.0))
        throw invalid_argument("svbrdf.heldout_fraction must lie in (0, 1)");
    if (!(flash.lambda >= 0.0)) throw invalid_argument("svbrdf.lambda must be non-negative");
    for (double v : {step_init.diffuse, step_init.specular, step_init.roughness, step_init.height})
        if (!std::isfinite(v)) throw invalid_argument("svbrdf.step_init values must be finite");
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_json().dump()); }

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << cfg.to_json().dump(2) << "\n";
}

void apply_override(json& j, const std::string& dotted_key, const std::string& value) {
    if (dotted_key.empty()) throw invalid_argument("empty config key");
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw invalid_argument("malformed config key '" + dotted_key + "'");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[part] = std::move(parsed);
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

}  // namespace metappear::io

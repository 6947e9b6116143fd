// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/app/artifacts.hpp"

#include <algorithm>
#include <fstream>

#include "metappear/error.hpp"
#include "metappear/render/flash.hpp"

namespace metappear::app {

using nlohmann::json;

json spec_to_json(const data::SyntheticBrdfSpec& spec) {
    return {{"name", spec.name},
            {"diffuse", spec.diffuse},
            {"specular", spec.specular},
            {"roughness", spec.roughness},
            {"seed", spec.seed}};
}

data::SyntheticBrdfSpec spec_from_json(const json& j) {
    data::SyntheticBrdfSpec s;
    try {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "name" && it.key() != "diffuse" && it.key() != "specular" && it.key() != "roughness" &&
                it.key() != "seed")
                throw invalid_argument("unknown BRDF spec key '" + it.key() + "'");
        s.name = j.at("name").get<std::string>();
        s.diffuse = j.at("diffuse").get<Rgb>();
        s.specular = j.at("specular").get<Rgb>();
        s.roughness = j.at("roughness").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw format_error(std::string("BRDF spec: ") + e.what());
    }
    s.validate();
    return s;
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
}

namespace {

render::Image map_image(const svbrdf::SvBrdfMaps& maps, std::size_t which) {
    const std::size_t r = maps.resolution;
    render::Image img(r, r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            switch (which) {
                case 0: img.set(x, y, maps.diffuse(x, y)); break;
                case 1: img.set(x, y, maps.specular(x, y)); break;
                case 2: {
                    const double v = maps.roughness(x, y);
                    img.set(x, y, {v, v, v});
                    break;
                }
                default: {
                    const double v = maps.height(x, y);
                    img.set(x, y, {v, v, v});
                }
            }
        }
    return img;
}

constexpr const char* kMapNames[4] = {"diffuse", "specular", "roughness", "height"};

}  // namespace

void write_maps(const svbrdf::SvBrdfMaps& maps, const std::filesystem::path& dir, const std::string& prefix) {
    for (std::size_t m = 0; m < 4; ++m) {
        render::Image img = map_image(maps, m);
        render::write_raw(img, dir / (prefix + kMapNames[m] + ".raw"));
        if (m == 3) {
            const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
            const double lo_v = *lo, span = *hi - *lo;
            for (double& v : img.data) v = span > 0.0 ? (v - lo_v) / span : 0.5;
        }
        render::write_png_linear(img, dir / (prefix + kMapNames[m] + ".png"), m < 2 ? 2.2 : 1.0);
    }
}

svbrdf::SvBrdfMaps read_maps(const std::filesystem::path& dir, const std::string& prefix) {
    render::Image imgs[4];
    for (std::size_t m = 0; m < 4; ++m) imgs[m] = render::read_raw(dir / (prefix + kMapNames[m] + ".raw"));
    const std::size_t r = imgs[0].width;
    for (const auto& img : imgs)
        if (img.width != r || img.height != r) throw format_error("map dumps in " + dir.string() + " differ in size");
    svbrdf::SvBrdfMaps maps(r);
    for (std::size_t y = 0; y < r; ++y)
        for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                maps.at(svbrdf::kDiffuse + c, x, y) = svbrdf::unsquash_albedo(imgs[0].at(x, y, c));
                maps.at(svbrdf::kSpecular + c, x, y) = svbrdf::unsquash_albedo(imgs[1].at(x, y, c));
            }
            maps.at(svbrdf::kRoughness, x, y) = svbrdf::unsquash_roughness(imgs[2].at(x, y, 0));
            maps.at(svbrdf::kHeight, x, y) = imgs[3].at(x, y, 0);
        }
    return maps;
}

void save_flash_task(const svbrdf::FlashTask& task, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const render::FlashConfig& cfg = task.config();
    const json j = {{"name", task.name()},
                    {"resolution", task.resolution()},
                    {"light_height", cfg.light_height},
                    {"extent", cfg.extent},
                    {"intensity", cfg.intensity},
                    {"split_seed", task.split_seed()},
                    {"heldout_fraction", task.heldout_fraction()},
                    {"lambda", task.lambda()},
                    {"target", "target.raw"},
                    {"has_truth", task.truth().has_value()}};
    write_json(j, dir / "task.json");
    render::write_raw(task.target(), dir / "target.raw");
    render::write_png(task.target(), dir / "target.png");
    if (task.truth()) write_maps(*task.truth(), dir, "truth_");
}

svbrdf::FlashTask load_flash_task(const std::filesystem::path& dir) {
    const json j = read_json(dir / "task.json");
    try {
        render::FlashConfig cfg;
        cfg.light_height = j.at("light_height").get<double>();
        cfg.extent = j.at("extent").get<double>();
        cfg.intensity = j.at("intensity").get<double>();
        render::Image target = render::read_raw(dir / j.at("target").get<std::string>());
        if (target.width != j.at("resolution").get<std::size_t>())
            throw format_error(dir.string() + ": target resolution does not match task.json");
        std::optional<svbrdf::SvBrdfMaps> truth;
        if (j.value("has_truth", false)) truth = read_maps(dir, "truth_");
        return svbrdf::FlashTask(std::move(target), cfg, j.at("split_seed").get<std::uint64_t>(),
                                 j.at("heldout_fraction").get<double>(), j.at("lambda").get<double>(), std::move(truth),
                                 j.at("name").get<std::string>());
    } catch (const json::exception& e) {
        throw format_error(dir.string() + "/task.json: " + e.what());
    }
}

}  // namespace metappear::app

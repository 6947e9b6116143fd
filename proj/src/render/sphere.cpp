// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/render/sphere.hpp"

#include <cmath>

#include "metappear/error.hpp"
#include "metappear/nbrdf/nbrdf.hpp"

namespace metappear::render {

namespace {

// Orthonormal tangent frame around n (isotropic BRDFs do not care about the
// tangent azimuth).
void frame(const Vec3& n, Vec3& t, Vec3& b) {
    const Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    t = normalize(cross(a, n));
    b = cross(n, t);
}

Vec3 to_local(const Vec3& v, const Vec3& t, const Vec3& b, const Vec3& n) { return {dot(v, t), dot(v, b), dot(v, n)}; }

}  // namespace

void RenderConfig::validate() const {
    if (resolution == 0) throw invalid_argument("render resolution must be positive");
    if (!(intensity > 0.0)) throw invalid_argument("light intensity must be positive");
    if (std::abs(length(light_dir) - 1.0) > 1e-9 || std::abs(length(view_dir) - 1.0) > 1e-9)
        throw invalid_argument("light and view directions must be unit vectors");
}

BrdfBatchFn pointwise(std::function<Rgb(const Vec3& wi, const Vec3& wo)> f) {
    return [f = std::move(f)](std::span<const data::DirectionPair> dirs) {
        std::vector<Rgb> out(dirs.size());
        for (std::size_t i = 0; i < dirs.size(); ++i) out[i] = f(dirs[i].wi, dirs[i].wo);
        return out;
    };
}

BrdfBatchFn nbrdf_brdf(const diff::ParamVector& params) {
    nbrdf::check_nbrdf_arch(params.arch());
    return [params](std::span<const data::DirectionPair> dirs) {
        std::vector<data::Sample> samples(dirs.size());
        for (std::size_t i = 0; i < dirs.size(); ++i)
            samples[i].hd = data::half_diff_vectors(data::dirs_to_rusin(dirs[i].wi, dirs[i].wo));
        return nbrdf::predict(params, samples);
    };
}

bool sphere_normal(std::size_t x, std::size_t y, std::size_t resolution, Vec3& n) {
    const double r = static_cast<double>(resolution);
    const double px = (static_cast<double>(x) + 0.5) / r * 2.0 - 1.0;
    const double py = 1.0 - (static_cast<double>(y) + 0.5) / r * 2.0;
    const double rr = px * px + py * py;
    if (rr > 1.0) return false;
    n = {px, py, std::sqrt(1.0 - rr)};
    return true;
}

Image render_sphere(const BrdfBatchFn& brdf, const RenderConfig& cfg) {
    cfg.validate();
    Image img(cfg.resolution, cfg.resolution);
    std::vector<data::DirectionPair> dirs;
    std::vector<std::size_t> where;
    std::vector<double> cosines;
    for (std::size_t y = 0; y < cfg.resolution; ++y)
        for (std::size_t x = 0; x < cfg.resolution; ++x) {
            Vec3 n;
            if (!sphere_normal(x, y, cfg.resolution, n)) continue;
            Vec3 t, b;
            frame(n, t, b);
            const Vec3 wi = to_local(cfg.light_dir, t, b, n), wo = to_local(cfg.view_dir, t, b, n);
            if (wi.z <= 0.0 || wo.z <= 0.0) continue;
            dirs.push_back({normalize(wi), normalize(wo)});
            where.push_back(y * cfg.resolution + x);
            cosines.push_back(wi.z);
        }
    if (dirs.empty()) return img;
    const std::vector<Rgb> f = brdf(dirs);
    for (std::size_t i = 0; i < dirs.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) img.data[3 * where[i] + c] = f[i][c] * cosines[i] * cfg.intensity;
    return img;
}

}  // namespace metappear::render

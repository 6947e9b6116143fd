// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/data/merl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "metappear/error.hpp"

static_assert(std::endian::native == std::endian::little, "MERL I/O assumes a little-endian host");

namespace metappear::data {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

std::size_t clamp_index(double x, std::size_t n) {
    if (!(x > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(x), n - 1);
}

}  // namespace

MerlBrdf::MerlBrdf(std::string name, std::vector<double> raw) : name_(std::move(name)), raw_(std::move(raw)) {
    if (raw_.size() != 3 * kBins)
        throw format_error("MERL table must hold " + std::to_string(3 * kBins) + " values, got " +
                           std::to_string(raw_.size()));
    for (std::size_t i = 0; i < raw_.size(); ++i)
        if (!std::isfinite(raw_[i])) throw format_error("MERL table has a non-finite value at entry " + std::to_string(i));
    for (std::size_t b = 0; b < kBins; ++b)
        if (bin_valid(b)) ++valid_bins_;
}

MerlBrdf MerlBrdf::tabulate(std::string name, const std::function<Rgb(const DirectionPair&)>& f) {
    std::vector<double> raw(3 * kBins, -1.0);
    for (std::size_t ih = 0; ih < kThetaH; ++ih)
        for (std::size_t id = 0; id < kThetaD; ++id)
            for (std::size_t ip = 0; ip < kPhiD; ++ip) {
                const DirectionPair dirs = rusin_to_dirs(bin_center(ih, id, ip));
                if (dirs.wi.z <= 0.0 || dirs.wo.z <= 0.0) continue;
                const Rgb v = f(dirs);
                const std::size_t b = flat_index(ih, id, ip);
                for (std::size_t c = 0; c < 3; ++c) raw[c * kBins + b] = v[c] / kScale[c];
            }
    return MerlBrdf(std::move(name), std::move(raw));
}

std::size_t MerlBrdf::bin_index(const RusinCoord& c) {
    const std::size_t ih = clamp_index(std::sqrt(c.theta_h / kHalfPi) * kThetaH, kThetaH);
    const std::size_t id = clamp_index(c.theta_d / kHalfPi * kThetaD, kThetaD);
    double phi = c.phi_d;
    if (phi < 0.0) phi += std::numbers::pi;
    const std::size_t ip = clamp_index(phi / std::numbers::pi * kPhiD, kPhiD);
    return flat_index(ih, id, ip);
}

RusinCoord MerlBrdf::bin_point(std::size_t ih, std::size_t id, std::size_t ip, double uh, double ud, double up) {
    const double th = (static_cast<double>(ih) + uh) / kThetaH;
    RusinCoord c;
    c.theta_h = th * th * kHalfPi;
    c.theta_d = (static_cast<double>(id) + ud) / kThetaD * kHalfPi;
    c.phi_d = (static_cast<double>(ip) + up) / kPhiD * std::numbers::pi;
    return c;
}

RusinCoord MerlBrdf::bin_center(std::size_t ih, std::size_t id, std::size_t ip) {
    return bin_point(ih, id, ip, 0.5, 0.5, 0.5);
}

bool MerlBrdf::bin_valid(std::size_t flat) const {
    return raw_[flat] >= 0.0 && raw_[kBins + flat] >= 0.0 && raw_[2 * kBins + flat] >= 0.0;
}

Rgb MerlBrdf::bin_value(std::size_t flat) const {
    if (!bin_valid(flat)) return {0.0, 0.0, 0.0};
    return {raw_[flat] * kScale[0], raw_[kBins + flat] * kScale[1], raw_[2 * kBins + flat] * kScale[2]};
}

Rgb MerlBrdf::lookup(const RusinCoord& c) const { return bin_value(bin_index(c)); }

Rgb MerlBrdf::eval(const Vec3& wi, const Vec3& wo) const {
    if (wi.z <= 0.0 || wo.z <= 0.0) return {0.0, 0.0, 0.0};
    return lookup(dirs_to_rusin(wi, wo));
}

MerlBrdf load_merl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open MERL file " + path.string());
    std::int32_t dims[3] = {0, 0, 0};
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw format_error("truncated MERL header in " + path.string());
    if (dims[0] != 90 || dims[1] != 90 || dims[2] != 180)
        throw format_error("MERL header dimensions (" + std::to_string(dims[0]) + ", " + std::to_string(dims[1]) +
                           ", " + std::to_string(dims[2]) + ") differ from (90, 90, 180) in " + path.string());
    std::vector<double> raw(3 * MerlBrdf::kBins);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(double)))
        throw format_error("truncated MERL data in " + path.string() + ": read " + std::to_string(in.gcount()) +
                           " of " + std::to_string(raw.size() * sizeof(double)) + " bytes");
    return MerlBrdf(path.stem().string(), std::move(raw));
}

void save_merl(const MerlBrdf& brdf, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write MERL file " + path.string());
    const std::int32_t dims[3] = {90, 90, 180};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(brdf.raw().data()),
              static_cast<std::streamsize>(brdf.raw().size() * sizeof(double)));
    if (!out) throw io_error("failed writing MERL file " + path.string());
}

}  // namespace metappear::data

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "metappear/data/rusin.hpp"
#include "metappear/vec3.hpp"

namespace metappear::data {

/// Tabulated isotropic BRDF on the 90 x 90 x 180 half/diff grid. The raw
/// file values are kept verbatim so saving reproduces the input bytes; the
/// per-channel scale is applied on lookup. Negative raw values mark bins
/// without a measurement.
class MerlBrdf {
public:
    static constexpr std::size_t kThetaH = 90;
    static constexpr std::size_t kThetaD = 90;
    static constexpr std::size_t kPhiD = 180;
    static constexpr std::size_t kBins = kThetaH * kThetaD * kPhiD;  // 1,458,000
    static constexpr std::array<double, 3> kScale = {1.0 / 1500.0, 1.15 / 1500.0, 1.66 / 1500.0};

    MerlBrdf(std::string name, std::vector<double> raw);

    /// Tabulates `f` at the bin centres; bins whose centre lies below the
    /// horizon are marked invalid.
    static MerlBrdf tabulate(std::string name, const std::function<Rgb(const DirectionPair&)>& f);

    const std::string& name() const { return name_; }
    const std::vector<double>& raw() const { return raw_; }

    static std::size_t bin_index(const RusinCoord& c);
    static std::size_t flat_index(std::size_t ih, std::size_t id, std::size_t ip) {
        return ip + id * kPhiD + ih * kPhiD * kThetaD;
    }
    static RusinCoord bin_center(std::size_t ih, std::size_t id, std::size_t ip);
    /// Unit-square offsets (u_h, u_d, u_p) within bin (ih, id, ip).
    static RusinCoord bin_point(std::size_t ih, std::size_t id, std::size_t ip, double uh, double ud, double up);

    bool bin_valid(std::size_t flat) const;
    Rgb bin_value(std::size_t flat) const;
    /// Nearest-bin lookup. Invalid bins return zero.
    Rgb lookup(const RusinCoord& c) const;
    Rgb eval(const Vec3& wi, const Vec3& wo) const;
    std::size_t valid_bin_count() const { return valid_bins_; }

private:
    std::string name_;
    std::vector<double> raw_;
    std::size_t valid_bins_ = 0;
};

MerlBrdf load_merl(const std::filesystem::path& path);
void save_merl(const MerlBrdf& brdf, const std::filesystem::path& path);

}  // namespace metappear::data

// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "metappear/data/merl.hpp"
#include "metappear/data/synthetic.hpp"
#include "metappear/rng.hpp"

namespace metappear::data {

struct Sample {
    std::array<double, 6> hd{};  // half vector, difference vector
    Rgb target{};
    double cos_i = 1.0;
    double cos_o = 1.0;
};

/// A reflectance source a task samples from: a tabulated measurement or an
/// analytic synthetic material.
class BrdfSource {
public:
    BrdfSource(std::shared_ptr<const MerlBrdf> merl, std::uint64_t split_seed);
    explicit BrdfSource(SyntheticBrdfSpec spec);

    bool is_merl() const { return std::holds_alternative<std::shared_ptr<const MerlBrdf>>(source_); }
    const MerlBrdf& merl() const { return *std::get<std::shared_ptr<const MerlBrdf>>(source_); }
    const SyntheticBrdfSpec& synthetic() const { return std::get<SyntheticBrdfSpec>(source_); }
    std::string name() const;
    std::uint64_t split_seed() const { return split_seed_; }

    /// Reflectance for a direction pair in the local frame.
    Rgb eval(const Vec3& wi, const Vec3& wo) const;

private:
    std::variant<std::shared_ptr<const MerlBrdf>, SyntheticBrdfSpec> source_;
    std::uint64_t split_seed_ = 0;
};

/// Which side of the per-material 80/20 angular bin split to draw from.
enum class SplitPart { All, Train, Test };

inline constexpr double kAngularTrainFraction = 0.8;

/// True if bin `flat` belongs to the training side of the split for `seed`.
bool bin_in_train(std::uint64_t seed, std::size_t flat);

/// Exactly n valid samples: bins drawn uniformly on the half/diff grid,
/// below-horizon and invalid bins rejected. MERL sources use the bin centre
/// and its stored value; synthetic sources jitter within the bin and
/// evaluate analytically.
std::vector<Sample> sample_batch(const BrdfSource& source, std::size_t n, Rng& rng,
                                 SplitPart part = SplitPart::All);

}  // namespace metappear::data

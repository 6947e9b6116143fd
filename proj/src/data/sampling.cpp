// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/data/sampling.hpp"

#include <string>

#include "metappear/error.hpp"

namespace metappear::data {

BrdfSource::BrdfSource(std::shared_ptr<const MerlBrdf> merl, std::uint64_t split_seed)
    : source_(std::move(merl)), split_seed_(split_seed) {
    if (!std::get<std::shared_ptr<const MerlBrdf>>(source_)) throw invalid_argument("null MERL source");
}

BrdfSource::BrdfSource(SyntheticBrdfSpec spec) : source_(std::move(spec)) {
    synthetic().validate();
    split_seed_ = synthetic().seed;
}

std::string BrdfSource::name() const { return is_merl() ? merl().name() : synthetic().name; }

Rgb BrdfSource::eval(const Vec3& wi, const Vec3& wo) const {
    return is_merl() ? merl().eval(wi, wo) : eval_synthetic(synthetic(), wi, wo);
}

bool bin_in_train(std::uint64_t seed, std::size_t flat) {
    const std::uint64_t h = derive_seed({seed, static_cast<std::uint64_t>(flat)});
    return static_cast<double>(h >> 11) * 0x1.0p-53 < kAngularTrainFraction;
}

std::vector<Sample> sample_batch(const BrdfSource& source, std::size_t n, Rng& rng, SplitPart part) {
    if (n == 0) throw invalid_argument("sample count must be at least 1");
    if (source.is_merl() && source.merl().valid_bin_count() == 0)
        throw invalid_argument("MERL source '" + source.name() + "' has no valid bins");

    std::uniform_int_distribution<std::size_t> pick_h(0, MerlBrdf::kThetaH - 1);
    std::uniform_int_distribution<std::size_t> pick_d(0, MerlBrdf::kThetaD - 1);
    std::uniform_int_distribution<std::size_t> pick_p(0, MerlBrdf::kPhiD - 1);

    std::vector<Sample> out;
    out.reserve(n);
    const std::size_t max_attempts = 1000 * n + 1'000'000;
    for (std::size_t attempt = 0; out.size() < n; ++attempt) {
        if (attempt >= max_attempts)
            throw invalid_argument("source '" + source.name() + "' yielded no valid samples in the requested split");
        const std::size_t ih = pick_h(rng), id = pick_d(rng), ip = pick_p(rng);
        const std::size_t flat = MerlBrdf::flat_index(ih, id, ip);
        if (part != SplitPart::All && bin_in_train(source.split_seed(), flat) != (part == SplitPart::Train))
            continue;

        RusinCoord c;
        if (source.is_merl()) {
            if (!source.merl().bin_valid(flat)) continue;
            c = MerlBrdf::bin_center(ih, id, ip);
        } else {
            const double uh = uniform01(rng), ud = uniform01(rng), up = uniform01(rng);
            c = MerlBrdf::bin_point(ih, id, ip, uh, ud, up);
        }
        const DirectionPair dirs = rusin_to_dirs(c);
        if (dirs.wi.z <= 0.0 || dirs.wo.z <= 0.0) continue;

        Sample s;
        s.hd = half_diff_vectors(c);
        s.cos_i = dirs.wi.z;
        s.cos_o = dirs.wo.z;
        s.target = source.is_merl() ? source.merl().bin_value(flat) : eval_synthetic(source.synthetic(), dirs.wi, dirs.wo);
        out.push_back(s);
    }
    return out;
}

}  // namespace metappear::data

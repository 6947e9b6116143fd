// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "metappear/diff/inner_loop.hpp"
#include "metappear/diff/param_vector.hpp"

namespace metappear::io {

inline constexpr std::string_view kCheckpointMagic{"MTPCKPT\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint8_t {
    Params = 0,  // one parameter vector (overfit, finetune, adapted)
    Meta = 1,    // initialization followed by step sizes
};

struct TrainingMetadata {
    std::uint64_t epochs = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string application;

    bool operator==(const TrainingMetadata&) const = default;
};

/// Little-endian binary layout:
///   magic[8] u32 version u8 kind
///   architecture: u8 kind, u64 n_dims, u64 dims[n], u64 n_act, u8 act[n]
///   u64 n, f64 theta[n]            (kind Meta: then u64 n, f64 S[n])
///   metadata: u64 epochs, u64 seed, u64 config_hash, u64 len, char app[len]
struct Checkpoint {
    CheckpointKind kind = CheckpointKind::Params;
    diff::Architecture arch;
    std::vector<double> theta;
    std::vector<double> step_sizes;  // empty unless kind == Meta
    TrainingMetadata metadata;

    static Checkpoint from_meta(const diff::MetaParams& meta, TrainingMetadata md = {});
    static Checkpoint from_params(const diff::ParamVector& params, TrainingMetadata md = {});

    /// Stored doubles: 1350 for an NBRDF meta checkpoint, 675 for one NBRDF.
    std::size_t value_count() const { return theta.size() + step_sizes.size(); }
    diff::ParamVector params() const;
    diff::MetaParams meta() const;
    void validate() const;

    bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace metappear::io

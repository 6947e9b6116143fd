// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "metappear/error.hpp"

namespace metappear::io {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

// Guards the length prefixes against absurd values in corrupt files.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

class Writer {
public:
    template <class T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void put_doubles(const std::vector<double>& v) {
        put<std::uint64_t>(v.size());
        out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    void put_bytes(std::string_view s) { out_.append(s); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t count(const char* what) {
        const auto n = get<std::uint64_t>(what);
        if (n > kMaxCount) throw format_error(std::string("checkpoint: implausible ") + what + " count");
        return n;
    }
    std::vector<double> doubles(const char* what) {
        const std::uint64_t n = count(what);
        need(n * sizeof(double), what);
        std::vector<double> v(n);
        std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::string_view bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string_view s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n, const char* what) const {
        if (in_.size() - pos_ < n) throw format_error(std::string("checkpoint truncated while reading ") + what);
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::from_meta(const diff::MetaParams& meta, TrainingMetadata md) {
    meta.validate();
    Checkpoint ck;
    ck.kind = CheckpointKind::Meta;
    ck.arch = meta.init.arch();
    ck.theta = meta.init.raw();
    ck.step_sizes = meta.step_sizes;
    ck.metadata = std::move(md);
    return ck;
}

Checkpoint Checkpoint::from_params(const diff::ParamVector& params, TrainingMetadata md) {
    Checkpoint ck;
    ck.kind = CheckpointKind::Params;
    ck.arch = params.arch();
    ck.theta = params.raw();
    ck.metadata = std::move(md);
    return ck;
}

diff::ParamVector Checkpoint::params() const {
    validate();
    return diff::ParamVector(arch, theta);
}

diff::MetaParams Checkpoint::meta() const {
    validate();
    if (kind != CheckpointKind::Meta) throw invalid_argument("checkpoint holds plain parameters, not a meta-model");
    return diff::MetaParams{diff::ParamVector(arch, theta), step_sizes};
}

void Checkpoint::validate() const {
    arch.validate();
    const std::size_t n = arch.param_count();
    if (theta.size() != n)
        throw format_error("checkpoint holds " + std::to_string(theta.size()) + " parameters, " + arch.describe() +
                           " needs " + std::to_string(n));
    const std::size_t want_s = kind == CheckpointKind::Meta ? n : 0;
    if (step_sizes.size() != want_s)
        throw format_error("checkpoint holds " + std::to_string(step_sizes.size()) + " step sizes, expected " +
                           std::to_string(want_s));
}

std::string encode_checkpoint(const Checkpoint& ck) {
    ck.validate();
    Writer w;
    w.put_bytes(kCheckpointMagic);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ck.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ck.arch.kind));
    w.put<std::uint64_t>(ck.arch.dims.size());
    for (std::size_t d : ck.arch.dims) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(ck.arch.activations.size());
    for (diff::Activation a : ck.arch.activations) w.put<std::uint8_t>(static_cast<std::uint8_t>(a));
    w.put_doubles(ck.theta);
    if (ck.kind == CheckpointKind::Meta) w.put_doubles(ck.step_sizes);
    w.put<std::uint64_t>(ck.metadata.epochs);
    w.put<std::uint64_t>(ck.metadata.seed);
    w.put<std::uint64_t>(ck.metadata.config_hash);
    w.put<std::uint64_t>(ck.metadata.application.size());
    w.put_bytes(ck.metadata.application);
    return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (r.bytes(kCheckpointMagic.size(), "magic") != kCheckpointMagic)
        throw format_error("not a metappear checkpoint (bad magic)");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion)
        throw format_error("unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
                           std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    const auto kind = r.get<std::uint8_t>("kind");
    if (kind > 1) throw format_error("unknown checkpoint kind " + std::to_string(kind));
    ck.kind = static_cast<CheckpointKind>(kind);

    const auto arch_kind = r.get<std::uint8_t>("architecture kind");
    if (arch_kind > 2) throw format_error("unknown architecture kind " + std::to_string(arch_kind));
    ck.arch.kind = static_cast<diff::ArchKind>(arch_kind);
    ck.arch.dims.resize(r.count("dimension"));
    for (auto& d : ck.arch.dims) d = r.get<std::uint64_t>("dimension");
    ck.arch.activations.resize(r.count("activation"));
    for (auto& a : ck.arch.activations) {
        const auto v = r.get<std::uint8_t>("activation");
        if (v > 3) throw format_error("unknown activation " + std::to_string(v));
        a = static_cast<diff::Activation>(v);
    }
    try {
        ck.arch.validate();
    } catch (const Error& e) {
        throw format_error(std::string("checkpoint architecture: ") + e.what());
    }

    ck.theta = r.doubles("parameter");
    if (ck.kind == CheckpointKind::Meta) ck.step_sizes = r.doubles("step size");
    ck.metadata.epochs = r.get<std::uint64_t>("epochs");
    ck.metadata.seed = r.get<std::uint64_t>("seed");
    ck.metadata.config_hash = r.get<std::uint64_t>("config hash");
    const std::uint64_t len = r.count("application name");
    ck.metadata.application = std::string(r.bytes(len, "application name"));
    if (!r.done()) throw format_error("trailing bytes after checkpoint");
    ck.validate();
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(ck);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_checkpoint(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace metappear::io

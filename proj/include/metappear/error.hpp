// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace metappear {

enum class ErrorKind {
    InvalidArgument,  // shape / range / precondition violations
    Format,           // malformed files
    Io,               // unreadable or unwritable paths
    Numerical,        // NaN / Inf encountered
};

/// Error raised by every module. `index` carries the offending sample or step
/// when one is known.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what,
          std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(what), kind_(kind), index_(index) {}

    ErrorKind kind() const { return kind_; }
    std::optional<std::size_t> index() const { return index_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> index_;
};

inline Error invalid_argument(const std::string& what) {
    return Error(ErrorKind::InvalidArgument, what);
}

inline Error format_error(const std::string& what) {
    return Error(ErrorKind::Format, what);
}

inline Error io_error(const std::string& what) {
    return Error(ErrorKind::Io, what);
}

inline Error numerical_error(const std::string& what,
                             std::optional<std::size_t> index = std::nullopt) {
    return Error(ErrorKind::Numerical, what, index);
}

}  // namespace metappear
